use proptest::prelude::*;
use uwp_core::distributions::LogSumExp;
use uwp_core::elasticity::beta_ave;
use uwp_core::ingest::{self, CleaningConfig, DirtRates, SynthSpec};
use uwp_core::randomize::{permute_locations, WorkerTable};
use uwp_core::regress::{ols, ols_loglog, ResponseMode, StandardErrors};
use uwp_core::rng::Stream;

fn table_from(rows: &[(u8, f64)]) -> WorkerTable {
    let labels: Vec<String> = rows.iter().map(|(m, _)| format!("m{m}")).collect();
    WorkerTable::from_rows(rows.iter().zip(&labels).enumerate().map(|(i, ((_, w), l))| (i as u64, l.as_str(), *w))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_keeps_wages_and_sizes(rows in prop::collection::vec((0u8..12, 1.0f64..1e6), 2..300), seed in any::<u64>()) {
        let table = table_from(&rows);
        let moved = permute_locations(&table, &mut Stream::new(seed));
        prop_assert_eq!(&moved.wages, &table.wages);
        prop_assert_eq!(moved.municipality_sizes(), table.municipality_sizes());
    }

    #[test]
    fn ols_residuals_sum_to_zero(points in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..200)) {
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        prop_assume!(x.iter().any(|&v| (v - x[0]).abs() > 1e-3));
        let fit = ols(&x, &y, StandardErrors::Plain).unwrap();
        let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(fit.residuals.iter().sum::<f64>().abs() <= 1e-10 * scale);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fit.r2));
    }

    #[test]
    fn total_and_per_capita_slopes_differ_by_one(points in prop::collection::vec((1.0f64..1e6, 1e-3f64..1e3), 3..100)) {
        let sizes: Vec<f64> = points.iter().map(|p| p.0).collect();
        prop_assume!(sizes.iter().any(|&v| (v / sizes[0] - 1.0).abs() > 1e-3));
        let totals: Vec<f64> = points.iter().map(|p| p.0 * p.1).collect();
        let beta = ols_loglog(&sizes, &totals, ResponseMode::Total).unwrap().slope;
        let delta = ols_loglog(&sizes, &totals, ResponseMode::PerCapita).unwrap().slope;
        prop_assert!((beta - 1.0 - delta).abs() < 1e-9);
    }

    #[test]
    fn beta_ave_is_at_least_one(n_min in 1.0f64..1e6, sigma in 0.1f64..6.5, alpha in 0.3f64..2.5, fraction in 1e-3f64..=1.0) {
        let p = beta_ave(n_min, sigma, alpha, fraction).unwrap();
        prop_assert!(p.beta >= 1.0 - 1e-12, "{}", p.beta);
        prop_assert!(p.beta.is_finite());
    }

    #[test]
    fn log_sum_exp_merge_matches_sequential(values in prop::collection::vec(-800.0f64..800.0, 1..100), split in 0usize..100) {
        let split = split.min(values.len());
        let mut whole = LogSumExp::new();
        values.iter().for_each(|&v| whole.push(v));
        let (mut a, mut b) = (LogSumExp::new(), LogSumExp::new());
        values[..split].iter().for_each(|&v| a.push(v));
        values[split..].iter().for_each(|&v| b.push(v));
        a.merge(&b);
        prop_assert_eq!(a.count(), whole.count());
        prop_assert!((a.value() - whole.value()).abs() <= 1e-12 * whole.value().abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cleaning_ledger_conserves_rows(seed in any::<u64>(), rate in 0.0f64..0.2) {
        let mut spec = SynthSpec::calibrated(seed).unwrap();
        spec.municipalities = 20;
        spec.target_workers = None;
        spec.sizes = uwp_core::ParetoSpec::new(20.0, 1.5).unwrap();
        spec.dirt = DirtRates { unparseable: rate, missing_field: rate, wrong_type: rate, short_days: rate, bad_age: rate, below_floor: rate };
        let synth = ingest::synth_pila(spec).unwrap();
        let (table, ledger) = ingest::clean_to_table(synth.rows(), &CleaningConfig::default()).unwrap();
        prop_assert_eq!(ledger.input_rows, ledger.kept + ledger.rejected());
        prop_assert_eq!(ledger.kept as usize, table.len());
        prop_assert_eq!(ledger.kept, synth.total_workers());
    }
}
