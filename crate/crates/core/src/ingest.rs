//! Contribution records: cleaning, municipality filtering and a synthetic
//! generator with the same schema.
//!
//! Raw schema: `worker_id,municipality_id,total_annual_wage,days_worked,age,contributor_type`
//! with wages in integer pesos. Clean schema: `worker_id,municipality_id,monthly_wage`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::special::normal_quantile;
use crate::distributions::{Lognormal, Pareto};
use crate::error::{Error, Result};
use crate::randomize::WorkerTable;
use crate::rng::Stream;

pub const RAW_HEADER: [&str; 6] =
    ["worker_id", "municipality_id", "total_annual_wage", "days_worked", "age", "contributor_type"];
pub const CLEAN_HEADER: [&str; 3] = ["worker_id", "municipality_id", "monthly_wage"];

/// A raw field: parsed, empty, or present but unparseable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Field<T> {
    Value(T),
    Missing,
    Invalid(String),
}

impl<T: FromStr> Field<T> {
    pub fn parse(text: &str) -> Self {
        let t = text.trim();
        if t.is_empty() {
            Field::Missing
        } else {
            t.parse().map(Field::Value).unwrap_or_else(|_| Field::Invalid(t.to_string()))
        }
    }
}

impl<T: fmt::Display> fmt::Display for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Value(v) => v.fmt(f),
            Field::Missing => Ok(()),
            Field::Invalid(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContributorType {
    Dependent,
    Independent,
    Other,
}

impl FromStr for ContributorType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "dependent" => ContributorType::Dependent,
            "independent" => ContributorType::Independent,
            _ => ContributorType::Other,
        })
    }
}

impl fmt::Display for ContributorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContributorType::Dependent => "dependent",
            ContributorType::Independent => "independent",
            ContributorType::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawContribution {
    pub worker_id: Field<String>,
    pub municipality_id: Field<String>,
    pub total_annual_wage: Field<i64>,
    pub days_worked: Field<i64>,
    pub age: Field<i64>,
    pub contributor_type: Field<ContributorType>,
}

impl RawContribution {
    fn from_record(rec: &csv::StringRecord) -> Option<Self> {
        if rec.len() != RAW_HEADER.len() {
            return None;
        }
        Some(Self {
            worker_id: Field::parse(&rec[0]),
            municipality_id: Field::parse(&rec[1]),
            total_annual_wage: Field::parse(&rec[2]),
            days_worked: Field::parse(&rec[3]),
            age: Field::parse(&rec[4]),
            contributor_type: Field::parse(&rec[5]),
        })
    }

    fn to_record(&self) -> [String; 6] {
        [
            self.worker_id.to_string(),
            self.municipality_id.to_string(),
            self.total_annual_wage.to_string(),
            self.days_worked.to_string(),
            self.age.to_string(),
            self.contributor_type.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningConfig {
    pub minimum_monthly_wage: i64,
    pub min_age: i64,
    pub max_age: i64,
    pub min_days: i64,
    pub allowed_types: Vec<ContributorType>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            minimum_monthly_wage: 616_000,
            min_age: 15,
            max_age: 64,
            min_days: 30,
            allowed_types: vec![ContributorType::Dependent, ContributorType::Independent],
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_age >= self.max_age {
            return Err(Error::param("age", format!("{}:{} is empty", self.min_age, self.max_age)));
        }
        if self.minimum_monthly_wage <= 0 {
            return Err(Error::param("minimum_monthly_wage", "must be positive"));
        }
        if self.min_days < 1 {
            return Err(Error::param("min_days", "must be at least 1"));
        }
        Ok(())
    }
}

/// Cleaning rules in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Parse,
    Missing,
    ContributorType,
    Days,
    Age,
    WageFloor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CleaningLedger {
    pub input_rows: u64,
    pub kept: u64,
    pub parse_failure: u64,
    pub missing_field: u64,
    pub contributor_type: u64,
    pub days_worked: u64,
    pub age: u64,
    pub wage_floor: u64,
}

impl CleaningLedger {
    pub fn rejected(&self) -> u64 {
        self.parse_failure + self.missing_field + self.contributor_type + self.days_worked + self.age + self.wage_floor
    }

    fn record(&mut self, outcome: std::result::Result<(), Rule>) {
        self.input_rows += 1;
        match outcome {
            Ok(()) => self.kept += 1,
            Err(Rule::Parse) => self.parse_failure += 1,
            Err(Rule::Missing) => self.missing_field += 1,
            Err(Rule::ContributorType) => self.contributor_type += 1,
            Err(Rule::Days) => self.days_worked += 1,
            Err(Rule::Age) => self.age += 1,
            Err(Rule::WageFloor) => self.wage_floor += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.input_rows += other.input_rows;
        self.kept += other.kept;
        self.parse_failure += other.parse_failure;
        self.missing_field += other.missing_field;
        self.contributor_type += other.contributor_type;
        self.days_worked += other.days_worked;
        self.age += other.age;
        self.wage_floor += other.wage_floor;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanWorker {
    pub worker_id: String,
    pub municipality_id: String,
    pub monthly_wage: f64,
}

fn value<T: Clone>(f: &Field<T>) -> Option<T> {
    match f {
        Field::Value(v) => Some(v.clone()),
        _ => None,
    }
}

/// Apply the rules to one record; the first failing rule is returned.
pub fn check(rec: &RawContribution, cfg: &CleaningConfig) -> std::result::Result<CleanWorker, Rule> {
    let invalid = matches!(rec.total_annual_wage, Field::Invalid(_))
        || matches!(rec.days_worked, Field::Invalid(_))
        || matches!(rec.age, Field::Invalid(_));
    if invalid {
        return Err(Rule::Parse);
    }
    let (Some(worker_id), Some(municipality_id), Some(total), Some(days), Some(age), Some(kind)) = (
        value(&rec.worker_id),
        value(&rec.municipality_id),
        value(&rec.total_annual_wage),
        value(&rec.days_worked),
        value(&rec.age),
        value(&rec.contributor_type),
    ) else {
        return Err(Rule::Missing);
    };
    if !cfg.allowed_types.contains(&kind) {
        return Err(Rule::ContributorType);
    }
    if days < cfg.min_days {
        return Err(Rule::Days);
    }
    if age < cfg.min_age || age > cfg.max_age {
        return Err(Rule::Age);
    }
    // monthly = total / days * 30 >= floor, compared exactly in integers
    if (total as i128) * 30 < (cfg.minimum_monthly_wage as i128) * (days as i128) {
        return Err(Rule::WageFloor);
    }
    Ok(CleanWorker { worker_id, municipality_id, monthly_wage: total as f64 * 30.0 / days as f64 })
}

pub fn clean<I>(records: I, cfg: &CleaningConfig) -> Result<(Vec<CleanWorker>, CleaningLedger)>
where
    I: IntoIterator<Item = RawContribution>,
{
    cfg.validate()?;
    let mut ledger = CleaningLedger::default();
    let mut out = Vec::new();
    for rec in records {
        match check(&rec, cfg) {
            Ok(w) => {
                ledger.record(Ok(()));
                out.push(w);
            }
            Err(rule) => ledger.record(Err(rule)),
        }
    }
    Ok((out, ledger))
}

/// Clean a record stream straight into a worker table.
pub fn clean_to_table<I>(records: I, cfg: &CleaningConfig) -> Result<(WorkerTable, CleaningLedger)>
where
    I: IntoIterator<Item = RawContribution>,
{
    cfg.validate()?;
    let mut ledger = CleaningLedger::default();
    let mut table = WorkerTable::default();
    let mut index: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
    for rec in records {
        match check(&rec, cfg) {
            Ok(w) => {
                ledger.record(Ok(()));
                let next = table.labels.len() as u32;
                let code = *index.entry(w.municipality_id).or_insert_with_key(|k| {
                    table.labels.push(k.clone());
                    next
                });
                table.worker_ids.push(worker_key(&w.worker_id));
                table.municipality.push(code);
                table.wages.push(w.monthly_wage);
            }
            Err(rule) => ledger.record(Err(rule)),
        }
    }
    Ok((table, ledger))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let names: Vec<&str> = found.iter().map(str::trim).collect();
    if names != expected {
        return Err(Error::param("header", format!("expected `{}`, found `{}`", expected.join(","), names.join(","))));
    }
    Ok(())
}

/// Stream a raw CSV through the cleaning rules into a clean CSV.
pub fn clean_csv<R: Read, W: Write>(input: R, output: W, cfg: &CleaningConfig) -> Result<CleaningLedger> {
    cfg.validate()?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(reader.headers()?, &RAW_HEADER)?;
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(CLEAN_HEADER)?;
    let mut ledger = CleaningLedger::default();
    let mut rec = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => match RawContribution::from_record(&rec) {
                None => ledger.record(Err(Rule::Parse)),
                Some(raw) => match check(&raw, cfg) {
                    Ok(w) => {
                        writer.write_record([w.worker_id.as_str(), w.municipality_id.as_str(), &w.monthly_wage.to_string()])?;
                        ledger.record(Ok(()));
                    }
                    Err(rule) => ledger.record(Err(rule)),
                },
            },
            // malformed quoting or invalid UTF-8 in a row
            Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => ledger.record(Err(Rule::Parse)),
            Err(e) => return Err(e.into()),
        }
    }
    writer.flush()?;
    Ok(ledger)
}

pub fn write_raw<W: Write, I>(rows: I, output: W) -> Result<u64>
where
    I: IntoIterator<Item = RawContribution>,
{
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(RAW_HEADER)?;
    let mut n = 0;
    for r in rows {
        writer.write_record(r.to_record())?;
        n += 1;
    }
    writer.flush()?;
    Ok(n)
}

/// Read a raw CSV; rows with the wrong number of columns come back as `None`.
pub fn read_raw<R: Read>(input: R) -> Result<Vec<Option<RawContribution>>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(reader.headers()?, &RAW_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        out.push(rec.ok().and_then(|r| RawContribution::from_record(&r)));
    }
    Ok(out)
}

pub fn write_workers<W: Write>(workers: &[CleanWorker], output: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(CLEAN_HEADER)?;
    for w in workers {
        writer.write_record([w.worker_id.as_str(), w.municipality_id.as_str(), &w.monthly_wage.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Stable 64-bit id for a worker label; numeric labels map to themselves.
pub fn worker_key(label: &str) -> u64 {
    label.parse().unwrap_or_else(|_| {
        // FNV-1a
        label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    })
}

/// Load a clean CSV as a worker table.
pub fn read_workers<R: Read>(input: R) -> Result<WorkerTable> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(reader.headers()?, &CLEAN_HEADER)?;
    let mut rows: Vec<(u64, String, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let wage: f64 = rec[2]
            .trim()
            .parse()
            .map_err(|_| Error::param("monthly_wage", format!("row {}: `{}` is not a number", line + 2, &rec[2])))?;
        rows.push((worker_key(rec[0].trim()), rec[1].trim().to_string(), wage));
    }
    WorkerTable::from_rows(rows.iter().map(|(i, m, w)| (*i, m.as_str(), *w)))
}

pub fn clean_workers_to_table(workers: &[CleanWorker]) -> Result<WorkerTable> {
    WorkerTable::from_rows(workers.iter().map(|w| (worker_key(&w.worker_id), w.municipality_id.as_str(), w.monthly_wage)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub municipalities_dropped: usize,
    pub workers_dropped: usize,
    pub municipalities_kept: usize,
    pub workers_kept: usize,
}

/// Remove municipalities with fewer than `n_min` workers; labels are re-indexed.
pub fn drop_small_municipalities(table: &WorkerTable, n_min: u64) -> Result<(WorkerTable, DropReport)> {
    if n_min < 1 {
        return Err(Error::param("n_min", "must be at least 1"));
    }
    let sizes = table.municipality_sizes();
    let mut remap = vec![u32::MAX; sizes.len()];
    let mut labels = Vec::new();
    let mut report = DropReport::default();
    for (k, &s) in sizes.iter().enumerate() {
        if s >= n_min {
            remap[k] = labels.len() as u32;
            labels.push(table.labels[k].clone());
            report.municipalities_kept += 1;
        } else if s > 0 {
            report.municipalities_dropped += 1;
        }
    }
    let mut out = WorkerTable { labels, ..Default::default() };
    for i in 0..table.len() {
        let code = remap[table.municipality[i] as usize];
        if code == u32::MAX {
            report.workers_dropped += 1;
        } else {
            out.worker_ids.push(table.worker_ids[i]);
            out.municipality.push(code);
            out.wages.push(table.wages[i]);
        }
    }
    report.workers_kept = out.len();
    Ok((out, report))
}

/// Rates of injected dirty rows, each per clean row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DirtRates {
    pub unparseable: f64,
    pub missing_field: f64,
    pub wrong_type: f64,
    pub short_days: f64,
    pub bad_age: f64,
    pub below_floor: f64,
}

impl DirtRates {
    fn as_array(&self) -> [f64; 6] {
        [self.unparseable, self.missing_field, self.wrong_type, self.short_days, self.bad_age, self.below_floor]
    }
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub municipalities: usize,
    /// Sizes of the municipalities at or above the size threshold.
    pub sizes: Pareto<f64>,
    /// Share of municipalities drawn from the Pareto law; the rest are
    /// log-uniform below `n_min`.
    pub tail_share: f64,
    /// Untruncated monthly-wage law; clean rows are drawn above the floor.
    pub wages: Lognormal<f64>,
    pub minimum_monthly_wage: i64,
    /// Pick, among `size_attempts` size draws, the one whose total is closest.
    pub target_workers: Option<u64>,
    pub size_attempts: usize,
    pub worker_cap: u64,
    pub dirt: DirtRates,
    pub seed: u64,
}

impl SynthSpec {
    /// Defaults shaped like a national contribution register.
    pub fn calibrated(seed: u64) -> Result<Self> {
        Ok(Self {
            municipalities: 1117,
            sizes: Pareto::new(287.0, 0.67)?,
            tail_share: 553.0 / 1117.0,
            wages: Lognormal::new(10.23, 2.0)?,
            minimum_monthly_wage: 616_000,
            target_workers: Some(6_700_000),
            size_attempts: 64,
            worker_cap: 50_000_000,
            dirt: DirtRates::default(),
            seed,
        })
    }
}

fn draw_municipality_sizes(spec: &SynthSpec, attempt: u64) -> Vec<u64> {
    let mut s = Stream::derive(spec.seed, &[0, attempt]);
    let tail = (spec.tail_share * spec.municipalities as f64).round() as usize;
    let n_min = spec.sizes.n_min();
    (0..spec.municipalities)
        .map(|k| {
            if k < tail {
                spec.sizes.from_uniform(s.uniform()).floor().max(n_min.floor()).min(u64::MAX as f64 / 4.0) as u64
            } else {
                // log-uniform on [1, n_min)
                (n_min.ln() * s.uniform()).exp().floor().max(1.0) as u64
            }
        })
        .collect()
}

/// Synthetic contribution records with a known generating law.
#[derive(Debug, Clone)]
pub struct SynthPila {
    spec: SynthSpec,
    pub sizes: Vec<u64>,
    ln_floor: f64,
    floor_sf: f64,
}

pub fn synth_pila(spec: SynthSpec) -> Result<SynthPila> {
    if spec.municipalities < 2 {
        return Err(Error::param("municipalities", "need at least 2"));
    }
    if !(0.0..=1.0).contains(&spec.tail_share) {
        return Err(Error::param("tail_share", format!("{} not in [0, 1]", spec.tail_share)));
    }
    if spec.minimum_monthly_wage <= 0 {
        return Err(Error::param("minimum_monthly_wage", "must be positive"));
    }
    if spec.dirt.as_array().iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::param("dirt", "rates must lie in [0, 1]"));
    }
    let attempts = spec.size_attempts.max(1) as u64;
    let sizes = match spec.target_workers {
        None => draw_municipality_sizes(&spec, 0),
        Some(target) => (0..attempts)
            .map(|a| draw_municipality_sizes(&spec, a))
            .min_by_key(|s| s.iter().fold(0u64, |t, &v| t.saturating_add(v)).abs_diff(target))
            .unwrap_or_default(),
    };
    let total = sizes.iter().fold(0u64, |t, &v| t.saturating_add(v));
    if total > spec.worker_cap {
        return Err(Error::ResourceGuard { requested: total, cap: spec.worker_cap });
    }
    let ln_floor = (spec.minimum_monthly_wage as f64).ln();
    let floor_sf = spec.wages.ln_survival(spec.minimum_monthly_wage as f64)?.exp();
    if !(floor_sf > 0.0) {
        return Err(Error::Degenerate("wage law has no mass above the floor".into()));
    }
    Ok(SynthPila { spec, sizes, ln_floor, floor_sf })
}

impl SynthPila {
    pub fn total_workers(&self) -> u64 {
        self.sizes.iter().sum()
    }

    pub fn municipality_label(k: usize) -> String {
        format!("m{k:04}")
    }

    /// Lazily generated raw rows, municipality by municipality.
    pub fn rows(&self) -> SynthRows<'_> {
        SynthRows { synth: self, municipality: 0, remaining: self.sizes.first().copied().unwrap_or(0), stream: self.stream(0), next_id: 0, pending: Vec::new() }
    }

    fn stream(&self, k: usize) -> Stream {
        Stream::derive(self.spec.seed, &[1, k as u64])
    }

    fn monthly_wage(&self, s: &mut Stream) -> f64 {
        // inverse survival of the law above the floor
        let q = (s.uniform_open() * self.floor_sf).min(1.0 - f64::EPSILON);
        let z = -normal_quantile(q).unwrap_or(0.0);
        let w = (self.spec.wages.log_scale() + self.spec.wages.sigma() * z).exp();
        w.max(self.ln_floor.exp())
    }
}

pub struct SynthRows<'a> {
    synth: &'a SynthPila,
    municipality: usize,
    remaining: u64,
    stream: Stream,
    next_id: u64,
    pending: Vec<RawContribution>,
}

impl SynthRows<'_> {
    fn clean_row(&mut self) -> RawContribution {
        let s = &mut self.stream;
        let monthly = self.synth.monthly_wage(s);
        let days = 30 + s.below(331) as i64;
        let total = (monthly * days as f64 / 30.0).ceil() as i64;
        let age = 15 + s.below(50) as i64;
        let kind = if s.uniform() < 0.9 { ContributorType::Dependent } else { ContributorType::Independent };
        self.next_id += 1;
        RawContribution {
            worker_id: Field::Value(self.next_id.to_string()),
            municipality_id: Field::Value(SynthPila::municipality_label(self.municipality)),
            total_annual_wage: Field::Value(total),
            days_worked: Field::Value(days),
            age: Field::Value(age),
            contributor_type: Field::Value(kind),
        }
    }

    fn dirty_variants(&mut self, base: &RawContribution) {
        let rates = self.synth.spec.dirt.as_array();
        let floor = self.synth.spec.minimum_monthly_wage;
        for (rule, &rate) in rates.iter().enumerate() {
            if rate == 0.0 || self.stream.uniform() >= rate {
                continue;
            }
            self.next_id += 1;
            let mut r = base.clone();
            r.worker_id = Field::Value(self.next_id.to_string());
            match rule {
                0 => r.total_annual_wage = Field::Invalid("n/a".into()),
                1 => r.days_worked = Field::Missing,
                2 => r.contributor_type = Field::Value(ContributorType::Other),
                3 => r.days_worked = Field::Value(1 + self.stream.below(29) as i64),
                4 => r.age = Field::Value(if self.stream.uniform() < 0.5 { 14 } else { 65 }),
                _ => {
                    let Field::Value(days) = r.days_worked else { continue };
                    r.total_annual_wage = Field::Value(((floor - 1) * days / 30).max(0));
                }
            }
            self.pending.push(r);
        }
    }
}

impl Iterator for SynthRows<'_> {
    type Item = RawContribution;

    fn next(&mut self) -> Option<RawContribution> {
        if let Some(r) = self.pending.pop() {
            return Some(r);
        }
        while self.remaining == 0 {
            self.municipality += 1;
            if self.municipality >= self.synth.sizes.len() {
                return None;
            }
            self.remaining = self.synth.sizes[self.municipality];
            self.stream = self.synth.stream(self.municipality);
        }
        self.remaining -= 1;
        let row = self.clean_row();
        self.dirty_variants(&row);
        Some(row)
    }
}
