//! Plain-text regression tables in the usual journal layout.

use std::fmt::Write;

use uwp_core::regress::OlsFit;

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// One column of a regression table.
pub struct Column<'a> {
    pub header: String,
    pub fit: &'a OlsFit<f64>,
}

/// Render coefficient, standard error and fit statistics per column, with
/// `extra` rows (label, one cell per column) before the statistics.
pub fn render(dependent: &str, regressor: &str, columns: &[Column], extra: &[(String, Vec<String>)]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    rows.push((String::new(), columns.iter().map(|c| c.header.clone()).collect()));
    rows.push((
        regressor.to_string(),
        columns.iter().map(|c| format!("{:.3}{}", c.fit.slope, stars(c.fit.slope_p_value()))).collect(),
    ));
    rows.push((String::new(), columns.iter().map(|c| format!("({:.3})", c.fit.slope_se)).collect()));
    rows.push((
        "Constant".into(),
        columns.iter().map(|c| format!("{:.3}{}", c.fit.intercept, stars(c.fit.intercept_p_value()))).collect(),
    ));
    rows.push((String::new(), columns.iter().map(|c| format!("({:.3})", c.fit.intercept_se)).collect()));
    rows.extend(extra.iter().cloned());
    rows.push(("Observations".into(), columns.iter().map(|c| c.fit.n_obs.to_string()).collect()));
    rows.push(("R2".into(), columns.iter().map(|c| format!("{:.3}", c.fit.r2)).collect()));
    rows.push(("Adjusted R2".into(), columns.iter().map(|c| format!("{:.3}", c.fit.adj_r2)).collect()));
    rows.push((
        "F statistic".into(),
        columns
            .iter()
            .map(|c| format!("{:.3}{} (df = {}; {})", c.fit.f_stat, stars(c.fit.f_p_value()), c.fit.df.0, c.fit.df.1))
            .collect(),
    ));

    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(dependent.len()) + 2;
    let cell_w: Vec<usize> =
        (0..columns.len()).map(|j| rows.iter().map(|r| r.1[j].len()).max().unwrap_or(0) + 2).collect();
    let total = label_w + cell_w.iter().sum::<usize>();
    let rule = "=".repeat(total);
    let mut out = String::new();
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<label_w$}Dependent variable: {dependent}", "");
    let _ = writeln!(out, "{}", "-".repeat(total));
    for (i, (label, cells)) in rows.iter().enumerate() {
        let mut line = format!("{label:<label_w$}");
        for (c, w) in cells.iter().zip(&cell_w) {
            let _ = write!(line, "{c:>w$}");
        }
        let _ = writeln!(out, "{}", line.trim_end());
        if i == 0 || i + 5 == rows.len() {
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "Note: *p<0.1; **p<0.05; ***p<0.01");
    out
}
