//! Recovery of generating parameters from synthetic data, and special
//! functions against series oracles.

use uwp_core::distributions::{erf, normal_sf, FamilyKind, FitFamily, Lognormal, Pareto};
use uwp_core::fit::{diagnostic_data, estimate_pareto_tail, fit_family, FitOptions};
use uwp_core::ingest::{self, CleaningConfig, SynthSpec};
use uwp_core::rng::Stream;

/// Maclaurin series of erf with 60 terms; the remainder at |x| <= 1 is far below 1e-16.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for k in 1..60 {
        term *= -x * x / k as f64;
        sum += term / (2 * k + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn erf_matches_series() {
    assert!((erf(1.0f64) - 0.842_700_792_949_715).abs() < 1e-15);
    for x in [-1.0, -0.3, 0.01, 0.5, 0.99] {
        assert!((erf::<f64>(x) - erf_series(x)).abs() < 1e-14, "{x}");
    }
}

#[test]
fn lognormal_survival_at_e() {
    let law = Lognormal::new(0.0, 1.0).unwrap();
    let oracle = 0.5 * (1.0 - erf_series(1.0 / std::f64::consts::SQRT_2));
    let s = law.survival(std::f64::consts::E).unwrap();
    assert!((s - oracle).abs() < 1e-14);
    assert!((s - 0.158_655).abs() < 1e-6);
    assert!((normal_sf(1.0) - oracle).abs() < 1e-14);
}

#[test]
fn pareto_empirical_survival() {
    let law = Pareto::new(1e4, 1.0).unwrap();
    let draws = law.sample(&mut Stream::new(3), 100_000).unwrap();
    let share = draws.iter().filter(|&&n| n >= 1e5).count() as f64 / draws.len() as f64;
    let sd = (0.1 * 0.9 / draws.len() as f64).sqrt();
    assert!((share - 0.1).abs() < 3.0 * sd, "{share}");
}

#[test]
fn truncated_lognormal_recovers_sigma() {
    let law = Lognormal::new(0.0, 2.0).unwrap();
    let bound = law.quantile(0.3).unwrap();
    let mut s = Stream::new(5);
    let mut data = Vec::with_capacity(1_000_000);
    while data.len() < 1_000_000 {
        let x = law.from_standard_normal(s.standard_normal());
        if x >= bound {
            data.push(x);
        }
    }
    let opts = FitOptions { truncation: Some(bound), bootstrap: 0, ..Default::default() };
    let fit = fit_family(&data, FamilyKind::TruncLognormal, &opts).unwrap();
    assert!((1.95..=2.05).contains(&fit.params()[1]), "{:?}", fit.params());
}

#[test]
fn pure_pareto_tail() {
    let data = Pareto::new(287.0, 0.67).unwrap().sample(&mut Stream::new(11), 100_000).unwrap();
    let tail = estimate_pareto_tail(&data).unwrap();
    assert!((287.0 * 0.5..=287.0 * 2.0).contains(&tail.n_min_hat), "{tail:?}");
    assert!((tail.alpha_hat - 0.67).abs() <= 0.05, "{tail:?}");
}

#[test]
fn spliced_tail_finds_the_splice() {
    // lognormal body below 1000, Pareto above, continuous density at the splice
    let mut s = Stream::new(13);
    let body = Lognormal::new(5.0, 1.0).unwrap();
    let tail = Pareto::new(1000.0, 1.2).unwrap();
    let mut data = Vec::new();
    while data.len() < 30_000 {
        let x = body.from_standard_normal(s.standard_normal());
        if x < 1000.0 {
            data.push(x);
        }
    }
    data.extend(tail.sample(&mut s, 5_000).unwrap());
    let fit = estimate_pareto_tail(&data).unwrap();
    assert!((500.0..=2000.0).contains(&fit.n_min_hat), "{fit:?}");
}

#[test]
fn self_fit_pp_deviation_is_small() {
    let family = FitFamily::new(FamilyKind::Gamma, vec![2.0, 0.5], None).unwrap();
    let data = family.sample(&mut Stream::new(17), 100_000).unwrap();
    let d = diagnostic_data(&family, &data, 200).unwrap();
    assert!(d.max_pp_deviation() < 0.01);
}

#[test]
fn calibrated_synthetic_register_is_recovered() {
    let synth = ingest::synth_pila(SynthSpec::calibrated(21).unwrap()).unwrap();
    let (table, ledger) = ingest::clean_to_table(synth.rows(), &CleaningConfig::default()).unwrap();
    assert_eq!(ledger.kept as usize, table.len());

    let opts = FitOptions { truncation: Some(616_000.0), bootstrap: 0, ..Default::default() };
    let wages = fit_family(&table.wages, FamilyKind::TruncLognormal, &opts).unwrap();
    assert!((wages.params()[1] - 2.0).abs() <= 0.1, "{:?}", wages.params());

    let sizes: Vec<f64> = table.municipality_sizes().into_iter().filter(|&n| n > 0).map(|n| n as f64).collect();
    let tail = estimate_pareto_tail(&sizes).unwrap();
    assert!((tail.alpha_hat - 0.67).abs() <= 0.1, "{tail:?}");
}
