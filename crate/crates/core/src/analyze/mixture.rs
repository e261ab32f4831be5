//! Finite mixture of Hawkes processes fitted by generalized EM over
//! sequence-level cluster labels.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{argmax, ClusterResult};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learn::{
    check_corpus, fit_mle, initial_params, log_likelihoods, run_em, stacked_branching, unstack_coeffs,
    Convergence, FeatureSet, LearnConfig,
};
use crate::model::{HawkesModel, Matrix};
use crate::rng;

/// EM iterations spent on each cluster model per outer M-step.
const INNER_ITERS: usize = 10;
const EMPTY: f64 = 1e-12;

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Clusters sequences with a `k`-component mixture. Each outer iteration
/// warm-starts the per-cluster EM with responsibilities as sequence weights,
/// updates the mixing proportions and recomputes responsibilities.
pub fn cluster_mixture(corpus: &Corpus, k: usize, kernel: &KernelSpec, cfg: &LearnConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    kernel.validate()?;
    check_corpus(corpus)?;
    if k == 0 || corpus.len() < k {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= number of sequences ({}), got k = {k}",
            corpus.len()
        )));
    }
    if !kernel.is_continuous() {
        return Err(Error::UnsupportedKernel(format!(
            "mixture clustering needs a continuous kernel, got {}",
            kernel.type_name()
        )));
    }
    let n = corpus.len();
    if k == 1 {
        let fit = fit_mle(corpus, kernel, cfg)?;
        let features = FeatureSet::build(corpus, kernel);
        let w = crate::learn::stack_coeffs(&fit.model);
        let ll: f64 = log_likelihoods(&features, fit.model.mu(), &w).iter().sum();
        let obj = ll - cfg.penalty.value(&crate::process::branching_matrix(&fit.model));
        return Ok(ClusterResult {
            k: 1,
            responsibilities: vec![vec![1.0]; n],
            assignments: vec![0; n],
            mixing: vec![1.0],
            models: Some(vec![fit.model]),
            medoids: None,
            objective_trace: vec![obj],
            converged: fit.converged,
            iterations: fit.iterations,
            warnings: fit.warnings,
        });
    }

    let d = corpus.dim();
    let features = FeatureSet::build(corpus, kernel);
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut label = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = if pos < k { pos } else { rng.random_range(0..k) };
    }
    let resp: Vec<Vec<f64>> = label
        .iter()
        .map(|&c| (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let params: Vec<(Vec<f64>, Matrix)> = (0..k)
        .map(|c| initial_params(corpus, features.n_params, rng::child_seed(cfg.seed, c as u64 + 1)))
        .collect();
    let inner = LearnConfig {
        max_iters: INNER_ITERS,
        ..cfg.clone()
    };
    let ctx = Ctx {
        features: &features,
        kernel,
        cfg,
        inner: &inner,
    };
    let mut state = ctx.step(params, &resp)?;
    let mut iterations = 1;
    let mut trace = vec![state.obj];
    let mut warnings = Vec::new();
    let mut frozen = vec![false; k];
    let mut conv = Convergence::new(cfg.tol);
    let mut converged = false;
    while iterations < cfg.max_iters {
        let mut reseeded = false;
        for c in 0..k {
            if frozen[c] || iterations >= cfg.max_iters || state.resp.iter().any(|r| r[c] >= EMPTY) {
                continue;
            }
            let worst = (0..n).fold(0, |b, i| if state.seq_ll[i] < state.seq_ll[b] { i } else { b });
            let mut resp = state.resp.clone();
            resp[worst] = (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect();
            let mut params = state.params.clone();
            params[c] = initial_params(corpus, features.n_params, rng::child_seed(cfg.seed, (k + c + iterations) as u64));
            let cand = ctx.step(params, &resp)?;
            iterations += 1;
            let msg = if cand.obj >= state.obj {
                state = cand;
                trace.push(state.obj);
                reseeded = true;
                format!("cluster {c} became empty; re-seeded from sequence {worst}")
            } else {
                frozen[c] = true;
                format!("cluster {c} became empty; re-seeding from sequence {worst} lowered the objective, left empty")
            };
            log::warn!("{msg}");
            warnings.push(msg);
        }
        if iterations >= cfg.max_iters {
            break;
        }
        let prev = state.obj;
        state = ctx.step(state.params, &state.resp)?;
        iterations += 1;
        trace.push(state.obj);
        if !reseeded && conv.update(prev, state.obj) {
            converged = true;
            break;
        }
    }
    let State { params, mixing, resp, .. } = state;
    let models = params
        .into_iter()
        .map(|(mu, w)| HawkesModel::new(mu, kernel.clone(), unstack_coeffs(&w, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterResult {
        k,
        assignments: resp.iter().map(|r| argmax(r)).collect(),
        responsibilities: resp,
        mixing,
        models: Some(models),
        medoids: None,
        objective_trace: trace,
        converged,
        iterations,
        warnings,
    })
}

struct Ctx<'a> {
    features: &'a FeatureSet,
    kernel: &'a KernelSpec,
    cfg: &'a LearnConfig,
    inner: &'a LearnConfig,
}

struct State {
    params: Vec<(Vec<f64>, Matrix)>,
    mixing: Vec<f64>,
    resp: Vec<Vec<f64>>,
    seq_ll: Vec<f64>,
    obj: f64,
}

impl Ctx<'_> {
    /// One generalized EM step: weighted M-step per cluster, mixing update,
    /// then posterior responsibilities and the penalized mixture objective.
    fn step(&self, mut params: Vec<(Vec<f64>, Matrix)>, resp: &[Vec<f64>]) -> Result<State> {
        let n = resp.len();
        let k = params.len();
        let mut mixing = vec![0.0; k];
        for (c, p) in params.iter_mut().enumerate() {
            let weights: Vec<f64> = resp.iter().map(|r| r[c]).collect();
            mixing[c] = weights.iter().sum::<f64>() / n as f64;
            if weights.iter().all(|&w| w < EMPTY) {
                continue;
            }
            let out = run_em(self.features, self.kernel, Some(&weights), p.0.clone(), p.1.clone(), self.inner)?;
            *p = (out.mu, out.w);
        }
        let lls: Vec<Vec<f64>> = params.iter().map(|(mu, w)| log_likelihoods(self.features, mu, w)).collect();
        let mut total = 0.0;
        let mut seq_ll = vec![0.0; n];
        let mut post = Vec::with_capacity(n);
        for i in 0..n {
            let lp: Vec<f64> = (0..k).map(|c| mixing[c].ln() + lls[c][i]).collect();
            let z = log_sum_exp(&lp);
            if !z.is_finite() {
                return Err(Error::Numerical(format!(
                    "sequence {i} has zero likelihood under every cluster"
                )));
            }
            seq_ll[i] = z;
            total += z;
            post.push(lp.iter().map(|x| (x - z).exp()).collect());
        }
        let d = self.features.dim;
        let pen: f64 = params
            .iter()
            .map(|(_, w)| self.cfg.penalty.value(&stacked_branching(w, self.kernel, d)))
            .sum();
        Ok(State {
            params,
            mixing,
            resp: post,
            seq_ll,
            obj: total - pen,
        })
    }
}
