use rand::Rng as _;

use super::{exp_sample, poisson_sample, run_sequences, SimConfig};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::{Event, HawkesModel};
use crate::process;
use crate::rng::Rng;

/// Cluster construction: Poisson immigrants, then each event independently
/// spawns offspring generation by generation.
pub fn simulate_branch(cfg: &SimConfig) -> Result<Corpus> {
    let rho = process::spectral_radius(&process::branching_matrix(&cfg.model));
    if rho >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "branching simulation needs spectral radius < 1, got {rho:.4}"
        )));
    }
    let model = &cfg.model;
    run_sequences(cfg, |rng| branch_one(model, cfg.t_end, cfg.max_events, rng))
}

fn branch_one(
    model: &HawkesModel,
    t_end: f64,
    cap: usize,
    rng: &mut Rng,
) -> std::result::Result<Vec<Event>, Vec<Event>> {
    let d = model.dim();
    let mut events = Vec::new();
    for u in 0..d {
        let n = poisson_sample(rng, model.mu()[u] * t_end);
        for _ in 0..n {
            events.push(Event::new(rng.random::<f64>() * t_end, u));
        }
    }
    if events.len() > cap {
        return Err(sorted(events));
    }
    let mut start = 0;
    while start < events.len() {
        let end = events.len();
        for p in start..end {
            let parent = events[p];
            for u in 0..d {
                spawn(model, parent, u, t_end, rng, &mut events);
            }
            if events.len() > cap {
                return Err(sorted(events));
            }
        }
        start = end;
    }
    Ok(sorted(events))
}

fn sorted(mut events: Vec<Event>) -> Vec<Event> {
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    events
}

/// Type-`u` children of `parent` on `(parent.time, t_end]`.
fn spawn(model: &HawkesModel, parent: Event, u: usize, t_end: f64, rng: &mut Rng, out: &mut Vec<Event>) {
    let v = parent.mark;
    let horizon = t_end - parent.time;
    if horizon <= 0.0 {
        return;
    }
    match model.kernel() {
        KernelSpec::Exponential { decay } => {
            let a = model.coeffs()[0][(v, u)];
            if a == 0.0 {
                return;
            }
            // mass of the kernel inside the window, and inversion of the
            // truncated exponential lag distribution
            let inside = -(-decay * horizon).exp_m1();
            let n = poisson_sample(rng, a * inside);
            for _ in 0..n {
                let lag = -(-rng.random::<f64>() * inside).ln_1p() / decay;
                let t = parent.time + lag;
                if t > parent.time && t <= t_end {
                    out.push(Event::new(t, u));
                }
            }
        }
        kernel => {
            // thinning against the kernel's global supremum over its support
            let bound: f64 = model
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c[(v, u)] * kernel.component_max(k))
                .sum();
            if bound <= 0.0 {
                return;
            }
            let span = horizon.min(kernel.support());
            let mut lag = 0.0;
            loop {
                lag += exp_sample(rng, bound);
                if lag > span {
                    break;
                }
                if rng.random::<f64>() * bound < model.kernel_value(v, u, lag) {
                    out.push(Event::new(parent.time + lag, u));
                }
            }
        }
    }
}
