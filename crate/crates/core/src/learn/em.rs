//! Shared expectation step over a [`FeatureSet`].

use rayon::prelude::*;

use super::features::{FeatureSet, SequenceFeatures};
use crate::model::Matrix;

/// Weighted sufficient statistics at the current parameters.
#[derive(Clone, Debug)]
pub(crate) struct Stats {
    /// Expected number of immigrant events per type.
    pub baseline: Vec<f64>,
    /// Expected offspring attributed to each parameter, `n_params x D`.
    pub offspring: Matrix,
    /// `sum_n w_n * exposure_n`
    pub exposure: Vec<f64>,
    /// `sum_n w_n * duration_n`
    pub time: f64,
    /// Weighted negative log-likelihood at the current parameters.
    pub nll: f64,
}

impl Stats {
    fn zeros(np: usize, d: usize) -> Self {
        Stats {
            baseline: vec![0.0; d],
            offspring: Matrix::zeros(np, d),
            exposure: vec![0.0; np],
            time: 0.0,
            nll: 0.0,
        }
    }

    fn add(mut self, other: &Stats) -> Self {
        for (a, b) in self.baseline.iter_mut().zip(&other.baseline) {
            *a += b;
        }
        self.offspring += &other.offspring;
        for (a, b) in self.exposure.iter_mut().zip(&other.exposure) {
            *a += b;
        }
        self.time += other.time;
        self.nll += other.nll;
        self
    }
}

/// Negative log-likelihood of one sequence and, optionally, its E-step
/// statistics (unweighted).
pub(crate) fn sequence_pass(
    seq: &SequenceFeatures,
    mu: &[f64],
    w: &Matrix,
    want_stats: bool,
) -> (f64, Option<Stats>) {
    let d = mu.len();
    let np = w.nrows();
    let mut stats = want_stats.then(|| Stats::zeros(np, d));
    let mut nll = 0.0;
    for (i, &u) in seq.marks.iter().enumerate() {
        let x = &seq.x[i * np..(i + 1) * np];
        let mut lam = mu[u];
        for (p, xp) in x.iter().enumerate() {
            if *xp != 0.0 {
                lam += xp * w[(p, u)];
            }
        }
        if lam <= 0.0 {
            return (f64::INFINITY, None);
        }
        nll -= lam.ln();
        if let Some(st) = stats.as_mut() {
            st.baseline[u] += mu[u] / lam;
            for (p, xp) in x.iter().enumerate() {
                if *xp != 0.0 {
                    st.offspring[(p, u)] += xp * w[(p, u)] / lam;
                }
            }
        }
    }
    let base: f64 = mu.iter().sum::<f64>() * seq.duration;
    let exc: f64 = (0..np)
        .map(|p| {
            let e = seq.exposure[p];
            if e == 0.0 {
                0.0
            } else {
                e * w.row(p).sum()
            }
        })
        .sum();
    nll += base + exc;
    if let Some(st) = stats.as_mut() {
        st.exposure.copy_from_slice(&seq.exposure);
        st.time = seq.duration;
        st.nll = nll;
    }
    (nll, stats)
}

/// Weighted E-step. Per-sequence work runs in parallel; the reduction is in
/// sequence order so results do not depend on scheduling.
pub(crate) fn e_step(features: &FeatureSet, weights: Option<&[f64]>, mu: &[f64], w: &Matrix) -> Stats {
    let per_seq: Vec<Option<Stats>> = features
        .seqs
        .par_iter()
        .enumerate()
        .map(|(n, s)| {
            let wt = weights.map_or(1.0, |ws| ws[n]);
            if wt == 0.0 {
                return None;
            }
            let (nll, stats) = sequence_pass(s, mu, w, true);
            Some(match stats {
                Some(mut st) => {
                    if wt != 1.0 {
                        st.baseline.iter_mut().for_each(|b| *b *= wt);
                        st.offspring *= wt;
                        st.exposure.iter_mut().for_each(|e| *e *= wt);
                        st.time *= wt;
                        st.nll *= wt;
                    }
                    st
                }
                None => {
                    let mut st = Stats::zeros(w.nrows(), mu.len());
                    st.nll = wt * nll;
                    st
                }
            })
        })
        .collect();
    per_seq
        .iter()
        .flatten()
        .fold(Stats::zeros(w.nrows(), mu.len()), |acc, s| acc.add(s))
}

/// Per-sequence log-likelihoods (not weighted).
pub(crate) fn log_likelihoods(features: &FeatureSet, mu: &[f64], w: &Matrix) -> Vec<f64> {
    features
        .seqs
        .par_iter()
        .map(|s| -sequence_pass(s, mu, w, false).0)
        .collect()
}

/// Rows `v` of the branching matrix for which zero is optimal given every
/// other parameter: with `g` the gradient of the weighted NLL at the point
/// where row `v` is zeroed and `m_u = min_k g[(k, v), u]`, the group penalty
/// `lam * ||row||` is minimized at zero when `||max(-m, 0)|| <= lam`.
pub(crate) fn zero_row_candidates(
    features: &FeatureSet,
    weights: Option<&[f64]>,
    mu: &[f64],
    w: &Matrix,
    lam: f64,
) -> Vec<usize> {
    let d = mu.len();
    let np = w.nrows();
    let k_count = np / d;
    let active: Vec<usize> = (0..d)
        .filter(|&v| (0..k_count).any(|k| w.row(k * d + v).iter().any(|x| *x != 0.0)))
        .collect();
    if active.is_empty() {
        return Vec::new();
    }
    let per_seq: Vec<(Vec<Matrix>, Vec<bool>)> = features
        .seqs
        .par_iter()
        .enumerate()
        .map(|(n, s)| {
            let wt = weights.map_or(1.0, |ws| ws[n]);
            let mut grads = vec![Matrix::zeros(k_count, d); active.len()];
            let mut feasible = vec![true; active.len()];
            if wt == 0.0 {
                return (grads, feasible);
            }
            for (a, &v) in active.iter().enumerate() {
                for k in 0..k_count {
                    for u in 0..d {
                        grads[a][(k, u)] += wt * s.exposure[k * d + v];
                    }
                }
            }
            for (i, &u) in s.marks.iter().enumerate() {
                let x = &s.x[i * np..(i + 1) * np];
                let lam_i = mu[u] + (0..np).map(|p| x[p] * w[(p, u)]).sum::<f64>();
                for (a, &v) in active.iter().enumerate() {
                    let own: f64 = (0..k_count).map(|k| x[k * d + v] * w[(k * d + v, u)]).sum();
                    let rest = lam_i - own;
                    if rest <= 0.0 {
                        feasible[a] = false;
                        continue;
                    }
                    for k in 0..k_count {
                        grads[a][(k, u)] -= wt * x[k * d + v] / rest;
                    }
                }
            }
            (grads, feasible)
        })
        .collect();
    let mut out = Vec::new();
    for (a, &v) in active.iter().enumerate() {
        if per_seq.iter().any(|(_, f)| !f[a]) {
            continue;
        }
        let g = per_seq
            .iter()
            .fold(Matrix::zeros(k_count, d), |acc, (gs, _)| acc + &gs[a]);
        let pull: f64 = (0..d)
            .map(|u| {
                let m = (0..k_count).map(|k| g[(k, u)]).fold(f64::INFINITY, f64::min);
                (-m).max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        if pull <= lam {
            out.push(v);
        }
    }
    out
}
