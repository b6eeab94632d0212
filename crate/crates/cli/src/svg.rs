//! Minimal static SVG charts.

use std::fmt::Write;

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 330.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 46.0;
const PALETTE: [&str; 6] = ["#1f4e79", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#555555"];

#[derive(Debug, Clone)]
pub enum Mark {
    Line,
    Dashed,
    Dots,
    /// Shaded area between `points` (lower edge) and these upper values.
    Band(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, mark: Mark) -> Self {
        Self { label: label.into(), points, mark }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = if log { if v > 0.0 { v.log10() } else { continue } } else { v };
            if t.is_finite() {
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        Self { log, lo: lo - pad, hi: hi + pad }
    }

    fn t(&self, v: f64) -> Option<f64> {
        let t = if self.log { if v > 0.0 { v.log10() } else { return None } } else { v };
        t.is_finite().then(|| (t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let stride = ((b - a) / 6 + 1).max(1);
            return (a..=b).step_by(stride as usize).map(|k| (10f64.powi(k), format!("1e{k}"))).collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last)
            .map(|k| {
                let v = k as f64 * step;
                let label = if step >= 1.0 { format!("{v:.0}") } else { format!("{:.*}", (-step.log10().floor()) as usize, v) };
                (v, label)
            })
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, chart: &Chart, ox: f64) {
    let xs = chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = chart.series.iter().flat_map(|s| {
        let extra: Vec<f64> = match &s.mark {
            Mark::Band(up) => up.clone(),
            _ => Vec::new(),
        };
        s.points.iter().map(|p| p.1).chain(extra)
    });
    let ax = Axis::fit(xs, chart.log_x);
    let ay = Axis::fit(ys, chart.log_y);
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let px = |v: f64| ax.t(v).map(|t| ox + MARGIN_L + t * w);
    let py = |v: f64| ay.t(v).map(|t| MARGIN_T + (1.0 - t) * h);

    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{MARGIN_T}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##,
        ox + MARGIN_L
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"##,
        ox + MARGIN_L + w / 2.0,
        escape(&chart.title)
    );
    for (v, label) in ax.ticks() {
        if let Some(x) = px(v) {
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{label}</text>"##,
                MARGIN_T + h,
                MARGIN_T + h + 4.0,
                MARGIN_T + h + 15.0
            );
        }
    }
    for (v, label) in ay.ticks() {
        if let Some(y) = py(v) {
            let x0 = ox + MARGIN_L;
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{label}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 3.5
            );
        }
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"##,
        ox + MARGIN_L + w / 2.0,
        PANEL_H - 10.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r##"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle" font-size="11">{}</text>"##,
        ox + 14.0,
        MARGIN_T + h / 2.0,
        escape(&chart.y_label)
    );

    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
        match &s.mark {
            Mark::Dots => {
                for (x, y) in &pts {
                    let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="2" fill="{color}" fill-opacity="0.7"/>"##);
                }
            }
            Mark::Line | Mark::Dashed => {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let dash = if matches!(s.mark, Mark::Dashed) { " stroke-dasharray=\"5,4\"" } else { "" };
                let _ = writeln!(
                    out,
                    r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"##,
                    d.join(" ")
                );
            }
            Mark::Band(upper) => {
                let lower: Vec<(f64, f64)> = s.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
                let top: Vec<(f64, f64)> =
                    s.points.iter().zip(upper).filter_map(|(&(x, _), &u)| Some((px(x)?, py(u)?))).collect();
                let d: Vec<String> =
                    lower.iter().chain(top.iter().rev()).map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(out, r##"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"##, d.join(" "));
            }
        }
        let ly = MARGIN_T + 14.0 + 14.0 * i as f64;
        let lx = ox + MARGIN_L + 8.0;
        let _ = writeln!(
            out,
            r##"<rect x="{lx:.1}" y="{:.1}" width="10" height="3" fill="{color}"/><text x="{:.1}" y="{ly:.1}" font-size="10">{}</text>"##,
            ly - 4.0,
            lx + 14.0,
            escape(&s.label)
        );
    }
}

/// Charts laid out side by side.
pub fn render(charts: &[Chart]) -> String {
    let width = PANEL_W * charts.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (i, c) in charts.iter().enumerate() {
        panel(&mut out, c, i as f64 * PANEL_W);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_every_mark() {
        let c = Chart::new("t <1>", "x", "y")
            .log_x()
            .with(Series::new("line", vec![(1.0, 1.0), (10.0, 2.0), (100.0, 3.0)], Mark::Line))
            .with(Series::new("band", vec![(1.0, 0.5), (100.0, 2.5)], Mark::Band(vec![1.5, 3.5])))
            .with(Series::new("dots", vec![(5.0, 1.0), (-1.0, 2.0)], Mark::Dots));
        let s = render(&[c.clone(), c]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches("<polygon").count(), 2);
        // the non-positive x is skipped on a log axis
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("t &lt;1&gt;"));
    }

    #[test]
    fn empty_chart_is_valid() {
        let s = render(&[Chart::new("", "", "")]);
        assert!(s.contains("</svg>"));
    }

    #[test]
    fn linear_ticks_cover_range() {
        let a = Axis::fit([0.0, 1.0].into_iter(), false);
        let t = a.ticks();
        assert!(t.len() >= 4);
        assert!(t.iter().all(|(v, _)| *v >= a.lo && *v <= a.hi));
    }
}
