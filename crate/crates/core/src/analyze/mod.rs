//! Granger graphs, sequence clustering, sequence distances and
//! time-varying infectivity.

mod distance;
mod granger;
mod mixture;
mod tvhp;

use serde::{Deserialize, Serialize};

pub use distance::{cluster_distance, distance_matrix, distance_matrix_csv, sequence_distance, DistanceParams};
pub use granger::{granger_graph, parse_dot, GrangerGraph, DEFAULT_THRESHOLD};
pub use mixture::cluster_mixture;
pub use tvhp::{fit_tvhp, simulate_tvhp, tvhp_log_likelihood, TvhpFit, TvhpModel, TvhpRow};

use crate::model::HawkesModel;

/// Partition of a corpus into `k` clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    /// `N x K`, rows sum to one.
    pub responsibilities: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub mixing: Vec<f64>,
    /// Per-cluster models (mixture clustering only).
    pub models: Option<Vec<HawkesModel>>,
    /// Medoid sequence indices (distance clustering only).
    pub medoids: Option<Vec<usize>>,
    /// Mixture log-likelihood per iteration, or the k-medoids cost.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if *x > row[best] {
            best = i;
        }
    }
    best
}
