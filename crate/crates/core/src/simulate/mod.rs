//! Event-sequence simulators: branching (cluster) construction, Ogata's
//! thinning, and exact sampling for exponential kernels.

mod bench;
mod branch;
mod exact;
mod ogata;

use rayon::prelude::*;

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::model::{Event, EventSequence, HawkesModel};
use crate::rng::{self, Rng};

pub use bench::{benchmark_simulators, BenchCsvRow, BenchOutcome, BenchRow};
pub use branch::simulate_branch;
pub use exact::simulate_exact_exp;
pub use ogata::simulate_ogata;

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: HawkesModel,
    pub t_end: f64,
    pub n_sequences: usize,
    pub seed: u64,
    /// Per-sequence cap; exceeding it is an error carrying the partial sequence.
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(model: HawkesModel, t_end: f64, n_sequences: usize, seed: u64) -> Self {
        SimConfig {
            model,
            t_end,
            n_sequences,
            seed,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Branch,
    Ogata,
    ExactExp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Branch, Method::Ogata, Method::ExactExp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Branch => "branch",
            Method::Ogata => "ogata",
            Method::ExactExp => "exact-exp",
        }
    }

    pub fn run(self, cfg: &SimConfig) -> Result<Corpus> {
        match self {
            Method::Branch => simulate_branch(cfg),
            Method::Ogata => simulate_ogata(cfg),
            Method::ExactExp => simulate_exact_exp(cfg),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`; expected one of branch, ogata, exact-exp")))
    }
}

pub(crate) fn sequence_id(index: usize) -> String {
    format!("seq{index:05}")
}

/// Run `one` for every sequence index on its own random stream and collect
/// the results in index order.
pub(crate) fn run_sequences<F>(cfg: &SimConfig, one: F) -> Result<Corpus>
where
    F: Fn(&mut Rng) -> std::result::Result<Vec<Event>, Vec<Event>> + Sync,
{
    cfg.validate()?;
    let dim = cfg.model.dim();
    let results: Vec<Result<EventSequence>> = (0..cfg.n_sequences)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            match one(&mut rng) {
                Ok(events) => EventSequence::new(sequence_id(i), dim, 0.0, cfg.t_end, events),
                Err(mut partial) => {
                    partial.truncate(cfg.max_events);
                    let partial = EventSequence::new(sequence_id(i), dim, 0.0, cfg.t_end, partial)?;
                    Err(Error::MaxEvents {
                        cap: cfg.max_events,
                        partial: Box::new(partial),
                    })
                }
            }
        })
        .collect();
    let sequences = results.into_iter().collect::<Result<Vec<_>>>()?;
    Corpus::from_sequences(dim, sequences)
}

pub(crate) fn warn_if_unstable(model: &HawkesModel) {
    let rho = crate::process::spectral_radius(&crate::process::branching_matrix(model));
    if rho >= 1.0 {
        log::warn!("branching matrix has spectral radius {rho:.4} >= 1; the process is not stationary");
    }
}

pub(crate) fn exp_sample(rng: &mut Rng, rate: f64) -> f64 {
    use rand::Rng as _;
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

pub(crate) fn poisson_sample(rng: &mut Rng, mean: f64) -> u64 {
    use rand_distr::{Distribution, Poisson};
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}
