//! Maximum likelihood by expectation-maximization for continuous kernels.

use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use super::em::{e_step, sequence_pass, zero_row_candidates};
use super::features::{stack_coeffs, unstack_coeffs, FeatureSet};
use super::shrink::update_coeffs;
use super::{Convergence, FitReport, LearnConfig, PenaltyKind};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::{EventSequence, HawkesModel, Matrix};
use crate::process::is_stable;
use crate::rng;

pub(crate) fn check_corpus(corpus: &Corpus) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("corpus has no sequences".into()));
    }
    if corpus.dim() == 0 {
        return Err(Error::InvalidInput("corpus has dimension 0".into()));
    }
    if corpus.sequences().iter().map(|s| s.duration()).sum::<f64>() <= 0.0 {
        return Err(Error::InvalidInput("corpus has zero total observation time".into()));
    }
    Ok(())
}

fn check_continuous(kernel: &KernelSpec) -> Result<()> {
    if !kernel.is_continuous() {
        return Err(Error::UnsupportedKernel(format!(
            "{} kernels are not fitted by direct MLE; use fit_mle_ode or fit_ls instead",
            kernel.type_name()
        )));
    }
    Ok(())
}

/// `mu = 0.5 n_u / T` and coefficients drawn from `U(0, 0.1 / D)`.
pub(crate) fn initial_params(corpus: &Corpus, n_params: usize, seed: u64) -> (Vec<f64>, Matrix) {
    let d = corpus.dim();
    let total: f64 = corpus.sequences().iter().map(|s| s.duration()).sum();
    let mut counts = vec![0usize; d];
    for s in corpus.sequences() {
        for (c, n) in counts.iter_mut().zip(s.counts()) {
            *c += n;
        }
    }
    let mu = counts.iter().map(|&n| 0.5 * n as f64 / total).collect();
    let mut rng = rng::seeded(seed);
    let hi = 0.1 / d as f64;
    let mut w = Matrix::zeros(n_params, d);
    for p in 0..n_params {
        for u in 0..d {
            w[(p, u)] = rng.random::<f64>() * hi;
        }
    }
    (mu, w)
}

/// Branching matrix of stacked coefficients.
pub(crate) fn stacked_branching(w: &Matrix, kernel: &KernelSpec, d: usize) -> Matrix {
    let mut phi = Matrix::zeros(d, d);
    for p in 0..w.nrows() {
        let mass = kernel.component_mass(p / d);
        for u in 0..d {
            phi[(p % d, u)] += mass * w[(p, u)];
        }
    }
    phi
}

pub(crate) struct EmOutcome {
    pub mu: Vec<f64>,
    pub w: Matrix,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// EM iterations from `(mu, w)` on precomputed features.
pub(crate) fn run_em(
    features: &FeatureSet,
    kernel: &KernelSpec,
    weights: Option<&[f64]>,
    mut mu: Vec<f64>,
    mut w: Matrix,
    cfg: &LearnConfig,
) -> Result<EmOutcome> {
    let d = features.dim;
    let objective = |nll: f64, w: &Matrix| nll + cfg.penalty.value(&stacked_branching(w, kernel, d));
    let mut stats = e_step(features, weights, &mu, &w);
    let mut obj = objective(stats.nll, &w);
    if !obj.is_finite() {
        return Err(Error::Numerical(
            "objective is not finite at the initial parameters (an event has zero intensity)".into(),
        ));
    }
    let mut trace = vec![obj];
    let mut conv = Convergence::new(cfg.tol);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        if stats.time > 0.0 {
            mu = stats.baseline.iter().map(|b| b / stats.time).collect();
        }
        w = update_coeffs(&stats.offspring, &stats.exposure, &w, d, &cfg.penalty);
        iterations += 1;
        stats = e_step(features, weights, &mu, &w);
        let mut next = objective(stats.nll, &w);
        if cfg.penalty.effective() == PenaltyKind::GroupSparse {
            for v in zero_row_candidates(features, weights, &mu, &w, cfg.penalty.weight) {
                let mut trial = w.clone();
                for p in (v..trial.nrows()).step_by(d) {
                    trial.row_mut(p).fill(0.0);
                }
                let trial_stats = e_step(features, weights, &mu, &trial);
                let trial_obj = objective(trial_stats.nll, &trial);
                if trial_obj <= next {
                    w = trial;
                    stats = trial_stats;
                    next = trial_obj;
                }
            }
        }
        trace.push(next);
        let done = conv.update(obj, next);
        obj = next;
        if done {
            converged = true;
            break;
        }
    }
    Ok(EmOutcome {
        mu,
        w,
        trace,
        converged,
        iterations,
    })
}

fn report(kernel: &KernelSpec, out: EmOutcome, start: Instant, d: usize) -> Result<FitReport> {
    let model = HawkesModel::new(out.mu, kernel.clone(), unstack_coeffs(&out.w, d))?;
    let mut warnings = Vec::new();
    if !is_stable(&model) {
        let msg = "fitted model is not stable (spectral radius of the branching matrix >= 1)".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(FitReport {
        model,
        objective_trace: out.trace,
        converged: out.converged,
        iterations: out.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        clamped: 0,
        warnings,
    })
}

/// Fits baseline rates and kernel coefficients for a fixed exponential or
/// basis kernel, starting from the seeded default initialization.
pub fn fit_mle(corpus: &Corpus, kernel: &KernelSpec, cfg: &LearnConfig) -> Result<FitReport> {
    let start = Instant::now();
    cfg.validate()?;
    kernel.validate()?;
    check_continuous(kernel)?;
    check_corpus(corpus)?;
    let features = FeatureSet::build(corpus, kernel);
    let (mu, w) = initial_params(corpus, features.n_params, cfg.seed);
    let out = run_em(&features, kernel, None, mu, w, cfg)?;
    report(kernel, out, start, corpus.dim())
}

/// Same as [`fit_mle`] but starting from `init`. Coefficients that start at
/// zero stay at zero.
pub fn fit_mle_from(corpus: &Corpus, init: &HawkesModel, cfg: &LearnConfig) -> Result<FitReport> {
    fit_mle_weighted(corpus, init, None, cfg)
}

/// EM with per-sequence weights (for example cluster responsibilities).
pub fn fit_mle_weighted(
    corpus: &Corpus,
    init: &HawkesModel,
    weights: Option<&[f64]>,
    cfg: &LearnConfig,
) -> Result<FitReport> {
    let start = Instant::now();
    cfg.validate()?;
    check_continuous(init.kernel())?;
    check_corpus(corpus)?;
    corpus.check_model(init)?;
    if let Some(ws) = weights {
        if ws.len() != corpus.len() || ws.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must be finite, nonnegative and one per sequence".into(),
            ));
        }
    }
    let features = FeatureSet::build(corpus, init.kernel());
    let out = run_em(
        &features,
        init.kernel(),
        weights,
        init.mu().to_vec(),
        stack_coeffs(init),
        cfg,
    )?;
    report(init.kernel(), out, start, corpus.dim())
}

/// Gradient of the corpus negative log-likelihood.
#[derive(Clone, Debug)]
pub struct NllGradient {
    pub nll: f64,
    pub mu: Vec<f64>,
    /// Same layout as [`HawkesModel::coeffs`].
    pub coeffs: Vec<Matrix>,
}

impl NllGradient {
    pub fn norm(&self) -> f64 {
        let a: f64 = self.mu.iter().map(|g| g * g).sum();
        let b: f64 = self.coeffs.iter().map(|c| c.norm_squared()).sum();
        (a + b).sqrt()
    }
}

pub fn nll_gradient(model: &HawkesModel, corpus: &Corpus) -> Result<NllGradient> {
    corpus.check_model(model)?;
    let d = model.dim();
    let features = FeatureSet::build(corpus, model.kernel());
    let w = stack_coeffs(model);
    let np = features.n_params;
    let mut g_mu = vec![0.0; d];
    let mut g_w = Matrix::zeros(np, d);
    let mut nll = 0.0;
    for s in &features.seqs {
        nll += sequence_pass(s, model.mu(), &w, false).0;
        for g in g_mu.iter_mut() {
            *g += s.duration;
        }
        for p in 0..np {
            for u in 0..d {
                g_w[(p, u)] += s.exposure[p];
            }
        }
        for (i, &u) in s.marks.iter().enumerate() {
            let x = &s.x[i * np..(i + 1) * np];
            let lam = model.mu()[u] + (0..np).map(|p| x[p] * w[(p, u)]).sum::<f64>();
            g_mu[u] -= 1.0 / lam;
            for p in 0..np {
                g_w[(p, u)] -= x[p] / lam;
            }
        }
    }
    Ok(NllGradient {
        nll,
        mu: g_mu,
        coeffs: unstack_coeffs(&g_w, d),
    })
}

/// Posterior attribution of one event to the baseline or to earlier events.
#[derive(Clone, Debug, Serialize)]
pub struct EventResponsibilities {
    pub baseline: f64,
    /// `(parent index, probability)` for each earlier event with positive
    /// kernel value.
    pub parents: Vec<(usize, f64)>,
}

pub fn responsibilities(model: &HawkesModel, seq: &EventSequence) -> Result<Vec<EventResponsibilities>> {
    model.check_sequence(seq)?;
    let events = seq.events();
    let support = model.kernel().support();
    let mut out = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        let mut parents = Vec::new();
        for (j, p) in events[..i].iter().enumerate().rev() {
            let lag = ev.time - p.time;
            if lag >= support {
                break;
            }
            if lag <= 0.0 {
                continue;
            }
            let phi = model.kernel_value(p.mark, ev.mark, lag);
            if phi > 0.0 {
                parents.push((j, phi));
            }
        }
        parents.reverse();
        let base = model.mu()[ev.mark];
        let lam = base + parents.iter().map(|(_, p)| p).sum::<f64>();
        if lam <= 0.0 {
            return Err(Error::Numerical(format!("event {i} has zero intensity")));
        }
        parents.iter_mut().for_each(|(_, p)| *p /= lam);
        out.push(EventResponsibilities {
            baseline: base / lam,
            parents,
        });
    }
    Ok(out)
}

