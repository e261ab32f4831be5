use rand::Rng as _;

use super::{run_sequences, warn_if_unstable, SimConfig};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::{Event, HawkesModel};
use crate::rng::Rng;

/// Exact simulation for exponential kernels without rejection.
///
/// Between events each intensity is `mu[u] + x_u * exp(-w s)`. The baseline
/// part and the decaying part are independent competing clocks: the baseline
/// clock is exponential and the decaying clock is sampled by inversion (it
/// may never ring). The earliest clock over all dimensions fires, and the
/// excitation state `x` is updated in `O(D)`.
pub fn simulate_exact_exp(cfg: &SimConfig) -> Result<Corpus> {
    let decay = match cfg.model.kernel() {
        KernelSpec::Exponential { decay } => *decay,
        other => {
            return Err(Error::UnsupportedKernel(format!(
                "exact simulation needs an exponential kernel, got {}",
                other.type_name()
            )))
        }
    };
    warn_if_unstable(&cfg.model);
    let model = &cfg.model;
    run_sequences(cfg, |rng| exact_one(model, decay, cfg.t_end, cfg.max_events, rng))
}

fn exact_one(
    model: &HawkesModel,
    decay: f64,
    t_end: f64,
    cap: usize,
    rng: &mut Rng,
) -> std::result::Result<Vec<Event>, Vec<Event>> {
    let d = model.dim();
    let a = &model.coeffs()[0];
    let mu = model.mu();
    // excitation part of each intensity at the current time
    let mut excite = vec![0.0; d];
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let mut best = f64::INFINITY;
        let mut best_u = 0;
        for u in 0..d {
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = 1.0 - rng.random::<f64>();
            let base = if mu[u] > 0.0 { -u1.ln() / mu[u] } else { f64::INFINITY };
            // P(no decaying-part event within s) = exp(-x (1 - e^{-w s}) / w)
            let excited = if excite[u] > 0.0 {
                let inner = 1.0 + decay * u2.ln() / excite[u];
                if inner > 0.0 {
                    -inner.ln() / decay
                } else {
                    f64::INFINITY
                }
            } else {
                f64::INFINITY
            };
            let cand = base.min(excited);
            if cand < best {
                best = cand;
                best_u = u;
            }
        }
        if !best.is_finite() || t + best > t_end {
            break;
        }
        t += best;
        let f = (-decay * best).exp();
        for (w, x) in excite.iter_mut().enumerate() {
            *x = *x * f + a[(best_u, w)] * decay;
        }
        events.push(Event::new(t, best_u));
        if events.len() > cap {
            return Err(events);
        }
    }
    Ok(events)
}
