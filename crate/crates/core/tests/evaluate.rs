mod common;

use common::*;
use hawkes_core::data::Corpus;
use hawkes_core::evaluate::{compare_learners, heldout_loglik, ks_exp1, rescaling_test, CompareRow, Learner, LearnerSpec};
use hawkes_core::io::csv_bytes;
use hawkes_core::learn::LearnConfig;
use hawkes_core::process::log_likelihood;
use hawkes_core::simulate::{simulate_exact_exp, SimConfig};
use hawkes_core::{Event, EventSequence, HawkesModel, KernelSpec};

fn sim(model: &HawkesModel, t_end: f64, n: usize, seed: u64) -> Corpus {
    simulate_exact_exp(&SimConfig::new(model.clone(), t_end, n, seed)).unwrap()
}

#[test]
fn heldout_on_empty_corpus_is_flagged() {
    let m = exp_model_1d(0.5, 0.3, 1.0);
    let empty = Corpus::from_sequences(1, vec![]).unwrap();
    let h = heldout_loglik(&m, &empty).unwrap();
    assert_eq!((h.total, h.per_event, h.n_events), (0.0, None, 0));
    let no_events = Corpus::from_sequences(1, vec![EventSequence::empty("e", 1, 0.0, 4.0).unwrap()]).unwrap();
    let h = heldout_loglik(&m, &no_events).unwrap();
    assert_eq!(h.per_event, None);
    assert!((h.total + 2.0).abs() < 1e-15);
}

#[test]
fn heldout_poisson_closed_form() {
    let m = HawkesModel::poisson(vec![1.7], KernelSpec::exponential(1.0)).unwrap();
    let c = sim(&m, 30.0, 1, 1);
    let n = c.n_events() as f64;
    let h = heldout_loglik(&m, &c).unwrap();
    let want = n * 1.7f64.ln() - 1.7 * 30.0;
    assert!((h.total - want).abs() < 1e-12 * want.abs());
    assert!((h.per_event.unwrap() - want / n).abs() < 1e-12);
}

#[test]
fn heldout_is_additive_over_a_partition() {
    let m = exp_model_1d(0.5, 0.4, 1.2);
    let c = sim(&m, 40.0, 3, 2);
    let h = heldout_loglik(&m, &c).unwrap();
    let parts: f64 = c.sequences().iter().map(|s| log_likelihood(&m, s).unwrap()).sum();
    assert!((h.total - parts).abs() <= 1e-9 * parts.abs());
    let first = Corpus::from_sequences(1, c.sequences()[..1].to_vec()).unwrap();
    let rest = Corpus::from_sequences(1, c.sequences()[1..].to_vec()).unwrap();
    let split = heldout_loglik(&m, &first).unwrap().total + heldout_loglik(&m, &rest).unwrap().total;
    assert!((h.total - split).abs() <= 1e-9 * split.abs());
    let two = HawkesModel::poisson(vec![0.5, 0.5], KernelSpec::exponential(1.0)).unwrap();
    assert!(heldout_loglik(&two, &c).is_err());
}

#[test]
fn rescaling_accepts_the_true_poisson_model() {
    let m = HawkesModel::poisson(vec![1.0], KernelSpec::exponential(1.0)).unwrap();
    let mut pass = 0;
    for seed in 0..100 {
        let s = &sim(&m, 1000.0, 1, seed).sequences()[0].clone();
        let r = rescaling_test(&m, s).unwrap();
        let n = r.n_transformed as f64;
        if r.ks_statistic < 1.36 / n.sqrt() + 0.01 {
            pass += 1;
        }
    }
    println!("true model passes in {pass} of 100 seeds");
    assert!(pass >= 95);
}

#[test]
fn rescaling_rejects_a_doubled_baseline() {
    let m = HawkesModel::poisson(vec![1.0], KernelSpec::exponential(1.0)).unwrap();
    let wrong = m.with_mu(vec![2.0]).unwrap();
    let mut reject = 0;
    for seed in 0..100 {
        let s = sim(&m, 1000.0, 1, 1000 + seed).sequences()[0].clone();
        let r = rescaling_test(&wrong, &s).unwrap();
        if r.ks_statistic > 1.36 / (r.n_transformed as f64).sqrt() + 0.01 {
            reject += 1;
        }
    }
    assert!(reject >= 95);
}

#[test]
fn rescaling_accepts_true_hawkes_model() {
    let m = hawkes_core::HawkesModel::exponential(
        vec![0.3, 0.6],
        1.5,
        hawkes_core::Matrix::from_row_slice(2, 2, &[0.4, 0.1, 0.2, 0.3]),
    )
    .unwrap();
    let c = sim(&m, 1000.0, 20, 7);
    let pass = c
        .sequences()
        .iter()
        .filter(|s| {
            let r = rescaling_test(&m, s).unwrap();
            r.ks_statistic < 1.36 / (r.n_transformed as f64).sqrt() + 0.01
        })
        .count();
    assert!(pass >= 18, "{pass}");
}

#[test]
fn rescaling_single_event() {
    let m = HawkesModel::poisson(vec![0.5], KernelSpec::exponential(1.0)).unwrap();
    let s = EventSequence::new("one", 1, 0.0, 10.0, vec![Event::new(2.0, 0)]).unwrap();
    let r = rescaling_test(&m, &s).unwrap();
    assert_eq!(r.n_transformed, 1);
    let f = 1.0 - (-1.0f64).exp();
    assert!((r.ks_statistic - f.max(1.0 - f)).abs() < 1e-15);
    assert!(rescaling_test(&m, &EventSequence::empty("e", 1, 0.0, 1.0).unwrap()).is_err());
}

#[test]
fn events_after_the_window_are_rejected() {
    let events = vec![Event::new(1.0, 0), Event::new(11.0, 0)];
    assert!(EventSequence::new("late", 1, 0.0, 10.0, events).is_err());
}

#[test]
fn ks_statistic_matches_definition() {
    let x = [0.1, 0.5, 2.0];
    let f: Vec<f64> = x.iter().map(|v: &f64| 1.0 - (-v).exp()).collect();
    let want = [f[0], 1.0 / 3.0 - f[0], f[1] - 1.0 / 3.0, 2.0 / 3.0 - f[1], f[2] - 2.0 / 3.0, 1.0 - f[2]]
        .into_iter()
        .fold(0.0, f64::max);
    assert!((ks_exp1(&[2.0, 0.1, 0.5]) - want).abs() < 1e-15);
}

fn specs() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec {
            name: "mle".into(),
            learner: Learner::Mle {
                kernel: KernelSpec::exponential(1.0),
                config: LearnConfig::default(),
            },
        },
        LearnerSpec {
            name: "ls".into(),
            learner: Learner::Ls {
                step: 0.5,
                lags: 8,
                ridge: 1e-3,
                config: LearnConfig::default(),
            },
        },
        LearnerSpec {
            name: "bad".into(),
            learner: Learner::Mle {
                kernel: KernelSpec::discretized(0.5, 4),
                config: LearnConfig::default(),
            },
        },
        LearnerSpec {
            name: "ode".into(),
            learner: Learner::Ode {
                step: 0.5,
                len: 8,
                config: LearnConfig::default(),
            },
        },
    ]
}

#[test]
fn comparison_table_rows() {
    let truth = exp_model_1d(0.5, 0.4, 1.0);
    let train = sim(&truth, 50.0, 10, 3);
    let test = sim(&truth, 50.0, 5, 4);
    let rows = compare_learners(&train, &test, &specs()[..1], None, false);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].mu_relerr.is_none() && rows[0].kernel_relerr.is_none() && rows[0].error.is_empty());
    assert!(rows[0].per_event_ll.is_some());

    let all = specs();
    let rows = compare_learners(&train, &test, &all, Some(&truth), false);
    assert_eq!(rows.len(), 4);
    assert!(rows[2].error.contains("fit_mle_ode"), "{}", rows[2].error);
    assert!(rows[0].mu_relerr.is_some() && rows[3].kernel_relerr.is_some());
    let mut rev = all.clone();
    rev.reverse();
    let rows_rev: Vec<CompareRow> = compare_learners(&train, &test, &rev, Some(&truth), false);
    let mut back = rows_rev.clone();
    back.reverse();
    assert_eq!(back, rows);

    let a = csv_bytes(&rows).unwrap();
    let b = csv_bytes(&compare_learners(&train, &test, &all, Some(&truth), false)).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("name,per_event_ll,mu_relerr,kernel_relerr,wall_time_s,iterations,error\n"));
    let timed = compare_learners(&train, &test, &all[..1], None, true);
    assert!(timed[0].wall_time_s.unwrap() > 0.0);
}

#[test]
fn learner_specs_parse_from_json() {
    let text = r#"[
        {"name": "exp", "method": "mle", "kernel": {"type": "exponential", "decay": 1.0},
         "config": {"penalty": {"kind": "sparse", "weight": 2.0}}},
        {"name": "grid", "method": "ls", "step": 0.5, "lags": 4}
    ]"#;
    let specs: Vec<LearnerSpec> = serde_json::from_str(text).unwrap();
    assert_eq!(specs.len(), 2);
    match &specs[0].learner {
        Learner::Mle { config, .. } => assert_eq!(config.penalty.weight, 2.0),
        other => panic!("{other:?}"),
    }
}
