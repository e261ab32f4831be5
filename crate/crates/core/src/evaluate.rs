//! Held-out likelihood, time-rescaling goodness of fit and learner
//! comparison tables.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learn::{estimation_error, fit_ls, fit_mle, fit_mle_ode, FitReport, LearnConfig};
use crate::model::{EventSequence, HawkesModel};
use crate::process::{event_path, log_likelihood};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldoutLoglik {
    pub total: f64,
    /// `total / n_events`; `None` when the corpus has no events.
    pub per_event: Option<f64>,
    pub per_sequence: Vec<f64>,
    pub n_events: usize,
}

pub fn heldout_loglik(model: &HawkesModel, corpus: &Corpus) -> Result<HeldoutLoglik> {
    corpus.check_model(model)?;
    let per_sequence = corpus
        .sequences()
        .par_iter()
        .map(|s| log_likelihood(model, s))
        .collect::<Result<Vec<f64>>>()?;
    let total = per_sequence.iter().sum();
    let n_events = corpus.n_events();
    Ok(HeldoutLoglik {
        total,
        per_event: (n_events > 0).then(|| total / n_events as f64),
        per_sequence,
        n_events,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingResult {
    pub ks_statistic: f64,
    pub n_transformed: usize,
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against Exp(1).
pub fn ks_exp1(samples: &[f64]) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = 1.0 - (-v).exp();
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Random time change: within each dimension the compensator increments
/// between consecutive events (the first measured from the window start)
/// are Exp(1) under the model; all dimensions are pooled.
pub fn rescaling_test(model: &HawkesModel, seq: &EventSequence) -> Result<RescalingResult> {
    model.check_sequence(seq)?;
    if seq.is_empty() {
        return Err(Error::InvalidInput(format!("sequence `{}` has no events", seq.id())));
    }
    let d = model.dim();
    let path = event_path(model, seq);
    let mut last = vec![0.0; d];
    let mut taus = Vec::with_capacity(seq.len());
    for (i, e) in seq.events().iter().enumerate() {
        let c = path.compensator[i * d + e.mark];
        taus.push(c - last[e.mark]);
        last[e.mark] = c;
    }
    Ok(RescalingResult {
        ks_statistic: ks_exp1(&taus),
        n_transformed: taus.len(),
    })
}

/// A learner and its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Learner {
    Mle {
        kernel: KernelSpec,
        #[serde(default)]
        config: LearnConfig,
    },
    Ode {
        step: f64,
        len: usize,
        #[serde(default)]
        config: LearnConfig,
    },
    Ls {
        step: f64,
        lags: usize,
        #[serde(default)]
        ridge: f64,
        #[serde(default)]
        config: LearnConfig,
    },
}

impl Learner {
    pub fn fit(&self, corpus: &Corpus) -> Result<FitReport> {
        match self {
            Learner::Mle { kernel, config } => fit_mle(corpus, kernel, config),
            Learner::Ode { step, len, config } => fit_mle_ode(corpus, *step, *len, config),
            Learner::Ls { step, lags, ridge, config } => fit_ls(corpus, *step, *lags, *ridge, config),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub name: String,
    #[serde(flatten)]
    pub learner: Learner,
}

/// One row of the comparison table. Empty cells are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub name: String,
    pub per_event_ll: Option<f64>,
    pub mu_relerr: Option<f64>,
    pub kernel_relerr: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub iterations: Option<usize>,
    pub error: String,
}

/// Fits every spec on `train` and scores it on `test`. Failures become rows
/// with an error message. Wall time is reported only when `timing` is set,
/// so that the table is reproducible byte for byte otherwise.
pub fn compare_learners(
    train: &Corpus,
    test: &Corpus,
    specs: &[LearnerSpec],
    truth: Option<&HawkesModel>,
    timing: bool,
) -> Vec<CompareRow> {
    specs
        .par_iter()
        .map(|spec| {
            let start = Instant::now();
            let scored = spec.learner.fit(train).and_then(|r| {
                let ll = heldout_loglik(&r.model, test)?;
                let err = truth.map(|t| estimation_error(&r.model, t)).transpose()?;
                Ok((r, ll, err))
            });
            let elapsed = start.elapsed().as_secs_f64();
            match scored {
                Ok((r, ll, err)) => CompareRow {
                    name: spec.name.clone(),
                    per_event_ll: ll.per_event,
                    mu_relerr: err.as_ref().map(|e| e.mu_relerr),
                    kernel_relerr: err.as_ref().map(|e| e.kernel_relerr),
                    wall_time_s: timing.then_some(elapsed),
                    iterations: Some(r.iterations),
                    error: String::new(),
                },
                Err(e) => CompareRow {
                    name: spec.name.clone(),
                    per_event_ll: None,
                    mu_relerr: None,
                    kernel_relerr: None,
                    wall_time_s: timing.then_some(elapsed),
                    iterations: None,
                    error: e.to_string(),
                },
            }
        })
        .collect()
}
