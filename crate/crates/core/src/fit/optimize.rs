//! Box-bounded Nelder-Mead simplex search.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial edge length along each axis.
    pub step: f64,
    /// Stop when the spread of objective values is below `tol * (1 + |best|)`.
    pub tol: f64,
    /// ... and the simplex is narrower than this along every axis.
    pub x_tol: f64,
    pub max_evaluations: usize,
    /// Every coordinate is clamped into `[-bound, bound]`.
    pub bound: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { step: 0.5, tol: 1e-9, x_tol: 1e-6, max_evaluations: 4000, bound: 60.0 }
    }
}

/// Minimize `f` from `x0`. Non-finite objective values count as `+inf`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &SimplexOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let clamp = |v: &mut Vec<f64>| v.iter_mut().for_each(|c| *c = c.clamp(-opts.bound, opts.bound));
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    clamp(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(&start);
    simplex.push((start.clone(), v0));
    for i in 0..dim {
        let mut p = start.clone();
        p[i] += if p[i] + opts.step > opts.bound { -opts.step } else { opts.step };
        let v = eval(&p);
        simplex.push((p, v));
    }

    let centroid = |s: &[(Vec<f64>, f64)]| {
        let mut c = vec![0.0; dim];
        for (p, _) in &s[..dim] {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / dim as f64;
            }
        }
        c
    };
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        let mut v: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect();
        clamp(&mut v);
        v
    };

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let f_spread = worst - best;
        let x_spread = (0..dim)
            .map(|i| {
                let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, _)| {
                    (lo.min(p[i]), hi.max(p[i]))
                });
                hi - lo
            })
            .fold(0.0, f64::max);
        if best.is_finite() && f_spread <= opts.tol * (1.0 + best.abs()) && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        if evaluations.get() >= opts.max_evaluations {
            break;
        }

        let c = centroid(&simplex);
        let worst_p = simplex[dim].0.clone();
        let xr = along(&c, &worst_p, -1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(&c, &worst_p, -2.0);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(&c, &worst_p, -0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(&c, &worst_p, 0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best_p = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let p = along(&best_p, &entry.0, 0.5);
            let v = eval(&p);
            *entry = (p, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evaluations.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = nelder_mead(|x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2), &[0.0, 0.0], &SimplexOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.5).abs() < 1e-5 && (m.x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let opts = SimplexOptions { max_evaluations: 20_000, x_tol: 1e-8, tol: 1e-14, ..Default::default() };
        let m = nelder_mead(|x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2), &[-1.2, 1.0], &opts);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m);
    }

    #[test]
    fn one_dimensional_and_bounded() {
        let m = nelder_mead(|x| (x[0] - 3.0).powi(2), &[10.0], &SimplexOptions::default());
        assert!((m.x[0] - 3.0).abs() < 1e-5);
        let opts = SimplexOptions { bound: 2.0, ..Default::default() };
        let m = nelder_mead(|x| -x[0], &[0.0], &opts);
        assert!((m.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn reports_budget_exhaustion() {
        let opts = SimplexOptions { max_evaluations: 10, ..Default::default() };
        let m = nelder_mead(|x| (x[0] - 1.0).powi(2) + x[1].powi(2), &[30.0, -30.0], &opts);
        assert!(!m.converged);
        assert!(m.value.is_finite());
    }

    #[test]
    fn survives_nan_regions() {
        let m = nelder_mead(|x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.7).powi(2) }, &[0.1], &SimplexOptions::default());
        assert!((m.x[0] - 0.7).abs() < 1e-5);
    }
}
