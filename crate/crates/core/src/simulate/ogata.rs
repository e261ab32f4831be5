use rand::Rng as _;

use super::{exp_sample, run_sequences, warn_if_unstable, SimConfig};
use crate::data::Corpus;
use crate::error::Result;
use crate::model::{Event, HawkesModel};
use crate::rng::Rng;

/// Ogata's modified thinning, valid for every kernel representation.
///
/// The bound at the current time `t` is `sum_u mu[u]` plus, for each past
/// event and kernel component, the supremum of that component over lags
/// `>= t - t_j`. It is refreshed after every proposal, accepted or not.
pub fn simulate_ogata(cfg: &SimConfig) -> Result<Corpus> {
    warn_if_unstable(&cfg.model);
    let model = &cfg.model;
    run_sequences(cfg, |rng| ogata_one(model, cfg.t_end, cfg.max_events, rng))
}

struct History<'a> {
    model: &'a HawkesModel,
    events: Vec<Event>,
    /// Events before this index are beyond the kernel support.
    oldest: usize,
    support: f64,
}

impl<'a> History<'a> {
    fn forget_before(&mut self, t: f64) {
        while self.oldest < self.events.len() && t - self.events[self.oldest].time >= self.support {
            self.oldest += 1;
        }
    }

    fn active(&self) -> &[Event] {
        &self.events[self.oldest..]
    }

    fn bound(&self, t: f64) -> f64 {
        let kernel = self.model.kernel();
        let base: f64 = self.model.mu().iter().sum();
        let d = self.model.dim();
        let excitation: f64 = self
            .active()
            .iter()
            .map(|e| {
                let lag = t - e.time;
                self.model
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let out: f64 = (0..d).map(|u| c[(e.mark, u)]).sum();
                        if out == 0.0 {
                            0.0
                        } else {
                            out * kernel.component_sup_from(k, lag)
                        }
                    })
                    .sum::<f64>()
            })
            .sum();
        base + excitation
    }

    fn intensities(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(self.model.mu());
        for e in self.active() {
            let lag = t - e.time;
            for (u, lam) in out.iter_mut().enumerate() {
                *lam += self.model.kernel_value(e.mark, u, lag);
            }
        }
    }
}

fn ogata_one(
    model: &HawkesModel,
    t_end: f64,
    cap: usize,
    rng: &mut Rng,
) -> std::result::Result<Vec<Event>, Vec<Event>> {
    let mut hist = History {
        model,
        events: Vec::new(),
        oldest: 0,
        support: model.kernel().support(),
    };
    let mut lam = vec![0.0; model.dim()];
    let mut t = 0.0;
    loop {
        hist.forget_before(t);
        let bound = hist.bound(t);
        if bound <= 0.0 {
            break;
        }
        t += exp_sample(rng, bound);
        if t > t_end {
            break;
        }
        hist.forget_before(t);
        hist.intensities(t, &mut lam);
        // one uniform decides both acceptance and the event type
        let x = rng.random::<f64>() * bound;
        let mut cum = 0.0;
        for (u, l) in lam.iter().enumerate() {
            cum += l;
            if x < cum {
                hist.events.push(Event::new(t, u));
                break;
            }
        }
        if hist.events.len() > cap {
            return Err(hist.events);
        }
    }
    Ok(hist.events)
}
