//! Least squares on binned counts.

use std::time::Instant;

use nalgebra::{Cholesky, DVector};

use super::mle::check_corpus;
use super::{FitReport, LearnConfig};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::{HawkesModel, Matrix};

/// Fits `X_u[k] ~ step * mu[u] + sum_{l=1..lags} sum_v phi_vu(l step) X_v[k-l] step`
/// over all bins with a full lag history. The lag-`l` coefficient becomes
/// cell `l - 1` of a discretized kernel with the same step.
pub fn fit_ls(corpus: &Corpus, step: f64, lags: usize, ridge: f64, cfg: &LearnConfig) -> Result<FitReport> {
    let start = Instant::now();
    cfg.validate()?;
    if !(step > 0.0 && step.is_finite()) || lags == 0 {
        return Err(Error::InvalidInput(format!(
            "bin width must be positive and lags at least 1, got {step} and {lags}"
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidInput(format!("ridge must be finite and nonnegative, got {ridge}")));
    }
    check_corpus(corpus)?;
    let min_len = (lags + 1) as f64 * step;
    if let Some(s) = corpus.sequences().iter().find(|s| s.duration() < min_len) {
        return Err(Error::InvalidInput(format!(
            "sequence `{}` spans {} but {lags} lags of width {step} need at least {min_len}",
            s.id(),
            s.duration()
        )));
    }
    let d = corpus.dim();
    let np = 1 + lags * d;

    // Integer moments: design rows are step * [1, X_v[k-l]] with integer counts.
    let mut gram = vec![0u64; np * np];
    let mut cross = vec![0u64; np * d];
    let mut yy = vec![0u64; d];
    let mut rows = 0u64;
    let mut z = vec![0u64; np];
    for seq in corpus.sequences() {
        let n_bins = (seq.duration() / step).floor() as usize;
        let mut counts = vec![0u64; n_bins * d];
        for e in seq.events() {
            let k = ((e.time - seq.t_start()) / step).floor() as usize;
            if k < n_bins {
                counts[k * d + e.mark] += 1;
            }
        }
        for k in lags..n_bins {
            z[0] = 1;
            for l in 1..=lags {
                for v in 0..d {
                    z[1 + (l - 1) * d + v] = counts[(k - l) * d + v];
                }
            }
            for a in 0..np {
                if z[a] == 0 {
                    continue;
                }
                for b in 0..np {
                    gram[a * np + b] += z[a] * z[b];
                }
                for u in 0..d {
                    cross[a * d + u] += z[a] * counts[k * d + u];
                }
            }
            for u in 0..d {
                yy[u] += counts[k * d + u] * counts[k * d + u];
            }
            rows += 1;
        }
    }
    if rows < np as u64 && ridge == 0.0 {
        return Err(Error::RankDeficient(format!(
            "{rows} usable bins for {np} unknowns per dimension; use a positive ridge"
        )));
    }
    let n = rows as f64;
    let s2 = step * step;
    // (Z'Z / N + ridge * I_phi) theta = Z'y / N
    let mut m = Matrix::from_fn(np, np, |a, b| s2 * gram[a * np + b] as f64 / n);
    for a in 1..np {
        m[(a, a)] += ridge;
    }
    let chol = Cholesky::new(m.clone()).ok_or_else(|| {
        Error::RankDeficient("normal equations are singular; use a positive ridge".into())
    })?;
    let mut mu = vec![0.0; d];
    let mut coeffs = vec![Matrix::zeros(d, d); lags];
    let mut clamped = 0;
    let mut objective = 0.0;
    for u in 0..d {
        let rhs = DVector::from_fn(np, |a, _| step * cross[a * d + u] as f64 / n);
        let theta = chol.solve(&rhs);
        // (1/N)||y - Z theta||^2 + ridge ||phi||^2 from the moments
        let mth = &m * &theta;
        objective += yy[u] as f64 / n - 2.0 * theta.dot(&rhs) + theta.dot(&mth);
        for (a, &t) in theta.iter().enumerate() {
            let t = if t < 0.0 {
                clamped += 1;
                0.0
            } else {
                t
            };
            if a == 0 {
                mu[u] = t;
            } else {
                let l = (a - 1) / d;
                let v = (a - 1) % d;
                coeffs[l][(v, u)] = t;
            }
        }
    }
    let model = HawkesModel::new(mu, KernelSpec::discretized(step, lags), coeffs)?;
    Ok(FitReport {
        model,
        objective_trace: vec![objective],
        converged: true,
        iterations: 1,
        wall_time: start.elapsed().as_secs_f64(),
        clamped,
        warnings: Vec::new(),
    })
}
