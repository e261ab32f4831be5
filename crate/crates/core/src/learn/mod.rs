//! Estimation of Hawkes models from event corpora.

mod em;
mod errors;
pub(crate) mod features;
mod ls;
mod mle;
mod newton;
mod ode;
mod shrink;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HawkesModel, Matrix};

pub use errors::{estimation_error, EstimationError};
pub use ls::fit_ls;
pub use mle::{fit_mle, fit_mle_from, fit_mle_weighted, nll_gradient, responsibilities, EventResponsibilities, NllGradient};
pub use ode::fit_mle_ode;

pub(crate) use em::{log_likelihoods, sequence_pass};
pub(crate) use features::{stack_coeffs, unstack_coeffs, FeatureSet, SequenceFeatures};
pub(crate) use mle::{check_corpus, initial_params, run_em, stacked_branching};
pub(crate) use ode::grid_em;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    #[default]
    None,
    Sparse,
    GroupSparse,
    LowRank,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::None => "none",
            PenaltyKind::Sparse => "sparse",
            PenaltyKind::GroupSparse => "group_sparse",
            PenaltyKind::LowRank => "low_rank",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PenaltyKind::None),
            "sparse" => Ok(PenaltyKind::Sparse),
            "group_sparse" | "group-sparse" | "group" => Ok(PenaltyKind::GroupSparse),
            "low_rank" | "low-rank" | "lowrank" => Ok(PenaltyKind::LowRank),
            _ => Err(Error::InvalidInput(format!(
                "unknown penalty `{s}` (expected none, sparse, group_sparse or low_rank)"
            ))),
        }
    }
}

/// Structural regularizer on the branching matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Penalty {
    pub kind: PenaltyKind,
    #[serde(default)]
    pub weight: f64,
}

impl Penalty {
    pub fn none() -> Self {
        Penalty::default()
    }

    pub fn sparse(weight: f64) -> Self {
        Penalty { kind: PenaltyKind::Sparse, weight }
    }

    pub fn group_sparse(weight: f64) -> Self {
        Penalty { kind: PenaltyKind::GroupSparse, weight }
    }

    pub fn low_rank(weight: f64) -> Self {
        Penalty { kind: PenaltyKind::LowRank, weight }
    }

    /// Kind with the weight folded in: zero weight is no penalty.
    pub(crate) fn effective(&self) -> PenaltyKind {
        if self.weight == 0.0 {
            PenaltyKind::None
        } else {
            self.kind
        }
    }

    /// Value of the penalty on a branching matrix.
    pub fn value(&self, phi: &Matrix) -> f64 {
        let w = self.weight;
        match self.effective() {
            PenaltyKind::None => 0.0,
            PenaltyKind::Sparse => w * phi.iter().map(|x| x.abs()).sum::<f64>(),
            PenaltyKind::GroupSparse => w * phi.row_iter().map(|r| r.norm()).sum::<f64>(),
            PenaltyKind::LowRank => w * phi.clone().singular_values().sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "penalty weight must be finite and nonnegative, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub penalty: Penalty,
    pub seed: u64,
    /// Curvature weight of the discretized-kernel learner.
    pub smoothness: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            max_iters: 200,
            tol: 1e-6,
            penalty: Penalty::none(),
            seed: 0,
            smoothness: 10.0,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "smoothness must be finite and nonnegative, got {}",
                self.smoothness
            )));
        }
        self.penalty.validate()
    }
}

/// Result of a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: HawkesModel,
    /// Objective at the initial parameters followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time: f64,
    /// Coordinates set to zero by nonnegativity clamping.
    pub clamped: usize,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }
}

/// Tracks the relative objective change rule shared by the iterative fits.
pub(crate) struct Convergence {
    tol: f64,
    streak: usize,
}

impl Convergence {
    pub fn new(tol: f64) -> Self {
        Convergence { tol, streak: 0 }
    }

    pub fn update(&mut self, prev: f64, cur: f64) -> bool {
        let rel = (prev - cur).abs() / prev.abs().max(f64::MIN_POSITIVE);
        if rel < self.tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= 3
    }
}
