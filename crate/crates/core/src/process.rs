//! Conditional intensity, compensator and log-likelihood.
//!
//! `lambda_u(t) = mu[u] + sum_{t_i < t} phi_{m_i, u}(t - t_i)`; history is
//! strictly before `t`, so the intensity at an event time is the left limit.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::{EventSequence, HawkesModel, Matrix};

fn check_dim(model: &HawkesModel, seq: &EventSequence, u: usize) -> Result<()> {
    model.check_sequence(seq)?;
    if u >= model.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension {u} out of range for dim {}",
            model.dim()
        )));
    }
    Ok(())
}

/// Left-limit intensity of type `u` at time `t`.
pub fn intensity(model: &HawkesModel, seq: &EventSequence, u: usize, t: f64) -> Result<f64> {
    check_dim(model, seq, u)?;
    if !(t >= seq.t_start() && t <= seq.t_end()) {
        return Err(Error::InvalidInput(format!(
            "time {t} outside window [{}, {}]",
            seq.t_start(),
            seq.t_end()
        )));
    }
    Ok(intensity_unchecked(model, seq, u, t))
}

fn intensity_unchecked(model: &HawkesModel, seq: &EventSequence, u: usize, t: f64) -> f64 {
    let events = seq.events();
    let end = events.partition_point(|e| e.time < t);
    let support = model.kernel().support();
    let excitation: f64 = events[..end]
        .iter()
        .rev()
        .take_while(|e| t - e.time < support)
        .map(|e| model.kernel_value(e.mark, u, t - e.time))
        .sum();
    model.mu()[u] + excitation
}

/// `int_{t0}^{t1} lambda_u(s) ds`, in closed form for every kernel type.
pub fn compensator(model: &HawkesModel, seq: &EventSequence, u: usize, t0: f64, t1: f64) -> Result<f64> {
    check_dim(model, seq, u)?;
    if !(seq.t_start() <= t0 && t0 <= t1 && t1 <= seq.t_end()) {
        return Err(Error::InvalidInput(format!(
            "interval [{t0}, {t1}] not inside window [{}, {}]",
            seq.t_start(),
            seq.t_end()
        )));
    }
    let events = seq.events();
    let end = events.partition_point(|e| e.time < t1);
    let excitation: f64 = events[..end]
        .iter()
        .map(|e| {
            let full = model.kernel_integral(e.mark, u, t1 - e.time);
            if e.time < t0 {
                full - model.kernel_integral(e.mark, u, t0 - e.time)
            } else {
                full
            }
        })
        .sum();
    Ok(model.mu()[u] * (t1 - t0) + excitation)
}

/// `Phi[v][u] = int_0^inf phi_vu`.
pub fn branching_matrix(model: &HawkesModel) -> Matrix {
    let d = model.dim();
    let kernel = model.kernel();
    let mut phi = Matrix::zeros(d, d);
    for (k, c) in model.coeffs().iter().enumerate() {
        phi += c * kernel.component_mass(k);
    }
    phi
}

pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius of the branching matrix is below one.
pub fn is_stable(model: &HawkesModel) -> bool {
    spectral_radius(&branching_matrix(model)) < 1.0
}

/// Per-event intensities `lambda_{m_i}(t_i)` and the per-dimension compensator
/// `Lambda_u(t_i)` measured from `t_start`, in one pass over the sequence.
pub(crate) struct EventPath {
    pub intensity: Vec<f64>,
    /// Row-major `n_events x dim`.
    pub compensator: Vec<f64>,
}

pub(crate) fn event_path(model: &HawkesModel, seq: &EventSequence) -> EventPath {
    let d = model.dim();
    let events = seq.events();
    let n = events.len();
    let mut intensity = Vec::with_capacity(n);
    let mut comp = Vec::with_capacity(n * d);
    let t0 = seq.t_start();
    let mu = model.mu();
    match model.kernel() {
        KernelSpec::Exponential { decay } => {
            let a = &model.coeffs()[0];
            // decayed[v] = sum over strictly earlier type-v events of exp(-w (t - t_j))
            let mut decayed = vec![0.0; d];
            let mut count = vec![0.0; d];
            let mut last = t0;
            let mut i = 0;
            while i < n {
                let t = events[i].time;
                let f = (-decay * (t - last)).exp();
                decayed.iter_mut().for_each(|r| *r *= f);
                last = t;
                let mut j = i;
                while j < n && events[j].time == t {
                    let u = events[j].mark;
                    let lam = mu[u] + (0..d).map(|v| a[(v, u)] * decay * decayed[v]).sum::<f64>();
                    intensity.push(lam);
                    for w in 0..d {
                        let exc: f64 = (0..d).map(|v| a[(v, w)] * (count[v] - decayed[v])).sum();
                        comp.push(mu[w] * (t - t0) + exc);
                    }
                    j += 1;
                }
                for e in &events[i..j] {
                    decayed[e.mark] += 1.0;
                    count[e.mark] += 1.0;
                }
                i = j;
            }
        }
        kernel => {
            let support = kernel.support();
            let phi = branching_matrix(model);
            let mut retired = vec![0.0; d];
            let mut oldest = 0;
            for i in 0..n {
                let t = events[i].time;
                while oldest < i && t - events[oldest].time >= support {
                    retired[events[oldest].mark] += 1.0;
                    oldest += 1;
                }
                let u = events[i].mark;
                let mut lam = mu[u];
                let mut exc: Vec<f64> = (0..d)
                    .map(|w| (0..d).map(|v| phi[(v, w)] * retired[v]).sum())
                    .collect();
                for e in &events[oldest..i] {
                    if e.time == t {
                        continue;
                    }
                    let lag = t - e.time;
                    lam += model.kernel_value(e.mark, u, lag);
                    for (w, x) in exc.iter_mut().enumerate() {
                        *x += model.kernel_integral(e.mark, w, lag);
                    }
                }
                intensity.push(lam);
                for w in 0..d {
                    comp.push(mu[w] * (t - t0) + exc[w]);
                }
            }
        }
    }
    EventPath {
        intensity,
        compensator: comp,
    }
}

/// Total compensator over the observation window, summed over dimensions.
pub(crate) fn total_compensator(model: &HawkesModel, seq: &EventSequence) -> f64 {
    let d = model.dim();
    let base: f64 = model.mu().iter().sum::<f64>() * seq.duration();
    let t_end = seq.t_end();
    let exc: f64 = seq
        .events()
        .iter()
        .map(|e| (0..d).map(|u| model.kernel_integral(e.mark, u, t_end - e.time)).sum::<f64>())
        .sum();
    base + exc
}

/// `sum_i log lambda_{m_i}(t_i) - sum_u Lambda_u(t_start, t_end)`.
///
/// Returns `-inf` when some event has zero intensity.
pub fn log_likelihood(model: &HawkesModel, seq: &EventSequence) -> Result<f64> {
    model.check_sequence(seq)?;
    let path = event_path(model, seq);
    let mut ll = 0.0;
    for lam in path.intensity {
        if lam <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ll += lam.ln();
    }
    Ok(ll - total_compensator(model, seq))
}

/// Intensity of every dimension sampled on `t_start, t_start + step, ...`.
pub fn intensity_samples(model: &HawkesModel, seq: &EventSequence, step: f64) -> Result<Vec<(f64, usize, f64)>> {
    model.check_sequence(seq)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling step must be positive, got {step}")));
    }
    let n = (seq.duration() / step).floor() as usize;
    let mut out = Vec::with_capacity((n + 1) * model.dim());
    for k in 0..=n {
        let t = (seq.t_start() + k as f64 * step).min(seq.t_end());
        for u in 0..model.dim() {
            out.push((t, u, intensity_unchecked(model, seq, u, t)));
        }
    }
    Ok(out)
}
