mod common;

use std::time::Instant;

use common::*;
use hawkes_core::simulate::{
    benchmark_simulators, simulate_branch, simulate_exact_exp, simulate_ogata, BenchOutcome, Method, SimConfig,
};
use hawkes_core::{Error, HawkesModel, KernelSpec, Matrix};

fn counts(corpus: &hawkes_core::data::Corpus) -> Vec<f64> {
    corpus.sequences().iter().map(|s| s.len() as f64).collect()
}

fn assert_valid(corpus: &hawkes_core::data::Corpus, t_end: f64) {
    for s in corpus.sequences() {
        assert_eq!((s.t_start(), s.t_end()), (0.0, t_end));
        assert!(s.events().windows(2).all(|w| w[0].time <= w[1].time));
        assert!(s.events().iter().all(|e| e.time >= 0.0 && e.time <= t_end && e.mark < s.dim()));
    }
}

#[test]
fn zero_kernel_is_homogeneous_poisson_for_every_method() {
    let model = HawkesModel::poisson(vec![2.0], KernelSpec::exponential(1.0)).unwrap();
    for method in Method::ALL {
        let cfg = SimConfig::new(model.clone(), 1000.0, 1, 3);
        let c = method.run(&cfg).unwrap();
        assert_valid(&c, 1000.0);
        let n = c.sequences()[0].len() as f64;
        assert!((n - 2000.0).abs() <= 3.0 * 2000f64.sqrt(), "{}: {n}", method.name());
    }
}

#[test]
fn zero_baseline_gives_empty_sequences() {
    let model = HawkesModel::exponential(vec![0.0, 0.0], 1.0, Matrix::from_element(2, 2, 0.2)).unwrap();
    for method in Method::ALL {
        let c = method.run(&SimConfig::new(model.clone(), 100.0, 5, 1)).unwrap();
        assert_eq!(c.n_events(), 0);
        assert_eq!(c.len(), 5);
    }
}

#[test]
fn simulators_are_deterministic_given_seed() {
    let model = HawkesModel::exponential(vec![0.3, 0.2], 1.5, Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.2, 0.2])).unwrap();
    for method in Method::ALL {
        let cfg = SimConfig::new(model.clone(), 200.0, 4, 99);
        assert_eq!(method.run(&cfg).unwrap(), method.run(&cfg).unwrap());
        let other = SimConfig::new(model.clone(), 200.0, 4, 100);
        assert_ne!(method.run(&cfg).unwrap(), method.run(&other).unwrap());
    }
}

#[test]
fn branch_mean_rate_matches_stationary_formula() {
    // stationary mean intensity mu / (1 - a) = 1.0
    let model = exp_model_1d(0.5, 0.5, 1.0);
    let c = simulate_branch(&SimConfig::new(model, 2000.0, 100, 5)).unwrap();
    let rates: Vec<f64> = counts(&c).iter().map(|n| n / 2000.0).collect();
    let se = std_dev(&rates) / 10.0;
    // the window edge loses offspring of late parents: about a/(1-a)^2 / T
    assert!((mean(&rates) - 1.0).abs() < 3.0 * se + 1e-3, "{} se {se}", mean(&rates));
}

#[test]
fn ogata_mean_rate_matches_branch_within_two_percent() {
    let model = exp_model_1d(0.5, 0.5, 1.0);
    let branch = simulate_branch(&SimConfig::new(model.clone(), 2000.0, 200, 21)).unwrap();
    let ogata = simulate_ogata(&SimConfig::new(model, 2000.0, 200, 22)).unwrap();
    let b = mean(&counts(&branch));
    let o = mean(&counts(&ogata));
    assert!((o - b).abs() / b < 0.02, "ogata {o} branch {b}");
}

fn exact_and_ogata_count_ks() -> f64 {
    let model = exp_model_1d(0.5, 0.5, 1.0);
    let exact = simulate_exact_exp(&SimConfig::new(model.clone(), 2000.0, 500, 31)).unwrap();
    let ogata = simulate_ogata(&SimConfig::new(model, 2000.0, 500, 32)).unwrap();
    let ks = ks_two_sample(&counts(&exact), &counts(&ogata));
    println!("two-sample KS of counts: {ks:.4}");
    ks
}

#[test]
fn exact_count_distribution_matches_ogata() {
    // two-sample KS critical value at alpha = 0.001 for n = m = 500
    let critical = 1.95 * (2.0f64 / 500.0).sqrt();
    assert!(exact_and_ogata_count_ks() < critical);
}

#[test]
#[ignore = "0.05 is below the null median of the KS statistic for 500 vs 500 samples (~0.055)"]
fn exact_count_distribution_ks_below_fixed_threshold() {
    assert!(exact_and_ogata_count_ks() < 0.05);
}

#[test]
fn exact_simulation_is_much_faster_than_thinning() {
    let model = exp_model_1d(0.5, 0.8, 1.0);
    let cfg = SimConfig::new(model, 1e4, 1, 8);
    let start = Instant::now();
    let exact = simulate_exact_exp(&cfg).unwrap();
    let t_exact = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let ogata = simulate_ogata(&cfg).unwrap();
    let t_ogata = start.elapsed().as_secs_f64();
    println!("exact {t_exact:.4}s ({} events), ogata {t_ogata:.4}s ({} events)", exact.n_events(), ogata.n_events());
    assert!(t_ogata >= 5.0 * t_exact);
}

#[test]
fn exact_rejects_non_exponential_kernels() {
    let model = HawkesModel::poisson(vec![1.0], KernelSpec::discretized(0.5, 4)).unwrap();
    assert!(matches!(
        simulate_exact_exp(&SimConfig::new(model, 10.0, 1, 0)),
        Err(Error::UnsupportedKernel(_))
    ));
}

#[test]
fn branch_refuses_unstable_models() {
    let model = exp_model_1d(0.5, 1.2, 1.0);
    assert!(matches!(simulate_branch(&SimConfig::new(model, 10.0, 1, 0)), Err(Error::InvalidInput(_))));
}

#[test]
fn event_cap_returns_partial_sequence() {
    let model = exp_model_1d(5.0, 0.5, 1.0);
    for method in Method::ALL {
        let mut cfg = SimConfig::new(model.clone(), 1000.0, 2, 4);
        cfg.max_events = 50;
        match method.run(&cfg) {
            Err(Error::MaxEvents { cap, partial }) => {
                assert_eq!(cap, 50);
                assert_eq!(partial.len(), 50);
                assert!(partial.events().windows(2).all(|w| w[0].time <= w[1].time));
            }
            other => panic!("{}: {other:?}", method.name()),
        }
    }
}

#[test]
fn non_exponential_kernels_simulate_consistently() {
    // same branching matrix through a Gaussian basis and a grid kernel
    let basis = HawkesModel::new(
        vec![0.4, 0.2],
        KernelSpec::basis(vec![0.5, 2.0], 0.5),
        vec![
            Matrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, 0.2]),
            Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.1, 0.1]),
        ],
    )
    .unwrap();
    let grid = HawkesModel::new(
        vec![0.4, 0.2],
        KernelSpec::discretized(0.5, 4),
        (0..4).map(|k| Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.3]) * (0.25 * (4 - k) as f64 / 2.5 * 2.0)).collect(),
    )
    .unwrap();
    for model in [basis, grid] {
        let phi = hawkes_core::process::branching_matrix(&model);
        let stationary = (Matrix::identity(2, 2) - phi.transpose()).try_inverse().unwrap()
            * nalgebra::DVector::from_vec(model.mu().to_vec());
        let expect = stationary.sum() * 300.0;
        let b = simulate_branch(&SimConfig::new(model.clone(), 300.0, 150, 1)).unwrap();
        let o = simulate_ogata(&SimConfig::new(model.clone(), 300.0, 150, 2)).unwrap();
        assert_valid(&b, 300.0);
        assert_valid(&o, 300.0);
        for c in [&b, &o] {
            let n = counts(c);
            let se = std_dev(&n) / (n.len() as f64).sqrt();
            // edge effect of at most a few events per sequence
            assert!((mean(&n) - expect).abs() < 3.0 * se + 3.0, "{} vs {expect}", mean(&n));
        }
    }
}

#[test]
fn benchmark_table_shape() {
    let exp = exp_model_1d(0.5, 0.5, 1.0);
    let rows = benchmark_simulators(&exp, &[50.0, 100.0], 2, 9, true).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| matches!(r.outcome, BenchOutcome::Done { .. })));
    let again = benchmark_simulators(&exp, &[50.0, 100.0], 2, 9, true).unwrap();
    let count = |rows: &[hawkes_core::simulate::BenchRow]| -> Vec<usize> {
        rows.iter()
            .map(|r| match r.outcome {
                BenchOutcome::Done { event_count, .. } => event_count,
                _ => usize::MAX,
            })
            .collect()
    };
    assert_eq!(count(&rows), count(&again));
    let grid = HawkesModel::poisson(vec![1.0], KernelSpec::discretized(0.5, 2)).unwrap();
    let rows = benchmark_simulators(&grid, &[10.0, 20.0], 1, 1, false).unwrap();
    let na: Vec<_> = rows.iter().filter(|r| r.outcome == BenchOutcome::NotApplicable).collect();
    assert_eq!(na.len(), 2);
    assert!(na.iter().all(|r| r.method == Method::ExactExp));
}
