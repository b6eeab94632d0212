//! Output placement, digests and run manifests.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const OUT_DIR_ENV: &str = "UWP_OUT_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Versions {
    cli: &'static str,
    core: &'static str,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    versions: Versions,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path).with_context(|| format!("reading {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// `dir/report.csv` becomes `dir/report.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    primary.with_file_name(format!("{stem}.manifest.json"))
}

/// Sibling of `primary` named `<stem>_<suffix>.<ext>`.
pub fn sibling(primary: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    primary.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Files read and written by one command.
#[derive(Debug)]
pub struct Run {
    out_dir: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(out_dir: PathBuf) -> Self {
        Self { out_dir, inputs: Vec::new(), outputs: Vec::new() }
    }

    /// Relative output paths live under the output directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }

    pub fn open(&mut self, path: &Path) -> Result<BufReader<File>> {
        let f = File::open(path).with_context(|| format!("cannot open input {}", path.display()))?;
        self.inputs.push(path.to_path_buf());
        Ok(BufReader::new(f))
    }

    pub fn create(&mut self, path: &Path) -> Result<BufWriter<File>> {
        let path = self.resolve(path);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.outputs.push(path);
        Ok(BufWriter::new(f))
    }

    pub fn write_csv<T: Serialize>(&mut self, path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(path)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&mut self, path: &Path, text: &str) -> Result<()> {
        let mut w = self.create(path)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Write the manifest next to `primary` and return its path.
    pub fn finish<C: Serialize>(self, command: &str, seed: u64, config: &C, primary: &Path) -> Result<PathBuf> {
        let digest = |paths: &[PathBuf]| -> Result<Vec<FileDigest>> {
            paths
                .iter()
                .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
                .collect()
        };
        let manifest = Manifest {
            command,
            seed,
            config,
            versions: Versions { cli: env!("CARGO_PKG_VERSION"), core: uwp_core::VERSION },
            inputs: digest(&self.inputs)?,
            outputs: digest(&self.outputs)?,
        };
        let path = manifest_path(&self.resolve(primary));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
