use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Method, SimConfig};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::HawkesModel;

#[derive(Clone, Debug, PartialEq)]
pub enum BenchOutcome {
    Done { wall_time_s: f64, event_count: usize },
    NotApplicable,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub t_end: f64,
    pub seed: u64,
    pub outcome: BenchOutcome,
}

/// Row of the benchmark CSV: `method,t_end,seed,wall_time_s,event_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCsvRow {
    pub method: String,
    pub t_end: f64,
    pub seed: u64,
    pub wall_time_s: String,
    pub event_count: String,
}

impl From<&BenchRow> for BenchCsvRow {
    fn from(r: &BenchRow) -> Self {
        let (wall, count) = match &r.outcome {
            BenchOutcome::Done {
                wall_time_s,
                event_count,
            } => (format!("{wall_time_s}"), event_count.to_string()),
            BenchOutcome::NotApplicable => ("n/a".into(), "n/a".into()),
            BenchOutcome::Failed(msg) => ("failed".into(), format!("failed: {msg}")),
        };
        BenchCsvRow {
            method: r.method.name().into(),
            t_end: r.t_end,
            seed: r.seed,
            wall_time_s: wall,
            event_count: count,
        }
    }
}

/// Time every applicable simulator on each horizon. Rows are ordered by
/// horizon, then method. With `timing` off, wall times are reported as zero
/// so the table is reproducible byte for byte.
pub fn benchmark_simulators(
    model: &HawkesModel,
    horizons: &[f64],
    n_sequences: usize,
    seed: u64,
    timing: bool,
) -> Result<Vec<BenchRow>> {
    if horizons.is_empty() {
        return Err(Error::InvalidInput("benchmark needs at least one horizon".into()));
    }
    let exponential = matches!(model.kernel(), KernelSpec::Exponential { .. });
    let mut rows = Vec::new();
    for &t_end in horizons {
        for method in Method::ALL {
            let outcome = if method == Method::ExactExp && !exponential {
                BenchOutcome::NotApplicable
            } else {
                let cfg = SimConfig::new(model.clone(), t_end, n_sequences, seed);
                let start = Instant::now();
                match method.run(&cfg) {
                    Ok(corpus) => BenchOutcome::Done {
                        wall_time_s: if timing { start.elapsed().as_secs_f64() } else { 0.0 },
                        event_count: corpus.n_events(),
                    },
                    Err(e) => BenchOutcome::Failed(e.to_string()),
                }
            };
            rows.push(BenchRow {
                method,
                t_end,
                seed,
                outcome,
            });
        }
    }
    Ok(rows)
}
