//! Hawkes process whose exponential-kernel infectivity varies with the
//! parent event's time, piecewise linearly on a grid.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learn::{check_corpus, grid_em, initial_params, sequence_pass, unstack_coeffs, FeatureSet, LearnConfig, Penalty, SequenceFeatures};
use crate::model::{matrix_to_rows, rows_to_matrix, Event, EventSequence, HawkesModel, Matrix};
use crate::simulate::{poisson_sample, run_sequences, SimConfig};

/// `lambda_u(t) = mu[u] + sum_{t_i < t} a_{m_i u}(t_i) w exp(-w (t - t_i))`
/// with `a(s)` interpolated linearly between grid nodes and held constant
/// outside the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TvhpFile", into = "TvhpFile")]
pub struct TvhpModel {
    mu: Vec<f64>,
    decay: f64,
    grid: Vec<f64>,
    nodes: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct TvhpFile {
    dim: usize,
    mu: Vec<f64>,
    decay: f64,
    grid: Vec<f64>,
    #[serde(rename = "A")]
    nodes: Vec<Vec<Vec<f64>>>,
}

impl From<TvhpModel> for TvhpFile {
    fn from(m: TvhpModel) -> Self {
        TvhpFile {
            dim: m.dim(),
            nodes: m.nodes.iter().map(matrix_to_rows).collect(),
            mu: m.mu,
            decay: m.decay,
            grid: m.grid,
        }
    }
}

impl TryFrom<TvhpFile> for TvhpModel {
    type Error = Error;

    fn try_from(f: TvhpFile) -> Result<Self> {
        if f.mu.len() != f.dim {
            return Err(Error::Format(format!("mu has {} entries for dim {}", f.mu.len(), f.dim)));
        }
        let nodes = f
            .nodes
            .iter()
            .map(|n| rows_to_matrix(n, f.dim))
            .collect::<Result<Vec<_>>>()?;
        TvhpModel::new(f.mu, f.decay, f.grid, nodes)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("time grid needs at least 2 nodes".into()));
    }
    if grid.iter().any(|s| !s.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Interpolation weights of `t`: `(g, 1 - h)` and `(g + 1, h)`.
fn hat(grid: &[f64], t: f64) -> (usize, f64) {
    let last = grid.len() - 1;
    if t <= grid[0] {
        return (0, 0.0);
    }
    if t >= grid[last] {
        return (last - 1, 1.0);
    }
    let g = grid.partition_point(|s| *s <= t) - 1;
    (g, (t - grid[g]) / (grid[g + 1] - grid[g]))
}

impl TvhpModel {
    pub fn new(mu: Vec<f64>, decay: f64, grid: Vec<f64>, nodes: Vec<Matrix>) -> Result<Self> {
        check_grid(&grid)?;
        // validates mu, decay and each node matrix
        for n in &nodes {
            HawkesModel::exponential(mu.clone(), decay, n.clone())?;
        }
        if nodes.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} node matrices for {} grid points",
                nodes.len(),
                grid.len()
            )));
        }
        Ok(TvhpModel { mu, decay, grid, nodes })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn nodes(&self) -> &[Matrix] {
        &self.nodes
    }

    pub fn infectivity_at(&self, s: f64) -> Matrix {
        let (g, h) = hat(&self.grid, s);
        &self.nodes[g] * (1.0 - h) + &self.nodes[g + 1] * h
    }

    /// Rows `(s, v, u, a)` for every node and pair.
    pub fn long_rows(&self) -> Vec<TvhpRow> {
        let d = self.dim();
        let mut rows = Vec::with_capacity(self.grid.len() * d * d);
        for (s, m) in self.grid.iter().zip(&self.nodes) {
            for v in 0..d {
                for u in 0..d {
                    rows.push(TvhpRow { s: *s, v, u, a: m[(v, u)] });
                }
            }
        }
        rows
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TvhpRow {
    pub s: f64,
    pub v: usize,
    pub u: usize,
    pub a: f64,
}

fn tvhp_features(seq: &EventSequence, grid: &[f64], decay: f64) -> SequenceFeatures {
    let d = seq.dim();
    let np = grid.len() * d;
    let events = seq.events();
    let n = events.len();
    let mut x = vec![0.0; n * np];
    let mut decayed = vec![0.0; np];
    let mut exposure = vec![0.0; np];
    let mut last = seq.t_start();
    let mut i = 0;
    while i < n {
        let t = events[i].time;
        let f = (-decay * (t - last)).exp();
        decayed.iter_mut().for_each(|r| *r *= f);
        last = t;
        let mut j = i;
        while j < n && events[j].time == t {
            for p in 0..np {
                x[j * np + p] = decay * decayed[p];
            }
            j += 1;
        }
        for e in &events[i..j] {
            let (g, h) = hat(grid, e.time);
            let tail = 1.0 - (-decay * (seq.t_end() - e.time)).exp();
            decayed[g * d + e.mark] += 1.0 - h;
            decayed[(g + 1) * d + e.mark] += h;
            exposure[g * d + e.mark] += (1.0 - h) * tail;
            exposure[(g + 1) * d + e.mark] += h * tail;
        }
        i = j;
    }
    SequenceFeatures {
        marks: events.iter().map(|e| e.mark).collect(),
        x,
        exposure,
        duration: seq.duration(),
    }
}

fn stacked(model: &TvhpModel) -> Matrix {
    let d = model.dim();
    Matrix::from_fn(model.grid.len() * d, d, |p, u| model.nodes[p / d][(p % d, u)])
}

pub fn tvhp_log_likelihood(model: &TvhpModel, seq: &EventSequence) -> Result<f64> {
    if seq.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "model has dim {} but sequence `{}` has dim {}",
            model.dim(),
            seq.id(),
            seq.dim()
        )));
    }
    let f = tvhp_features(seq, &model.grid, model.decay);
    Ok(-sequence_pass(&f, &model.mu, &stacked(model), false).0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvhpFit {
    pub model: TvhpModel,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time: f64,
    pub clamped: usize,
    pub warnings: Vec<String>,
}

/// Path-graph Laplacian scaled so that `a' Q a / 2 = beta * sum (a_{g+1} - a_g)^2`.
fn difference_matrix(len: usize, beta: f64) -> Matrix {
    let mut q = Matrix::zeros(len, len);
    for g in 0..len - 1 {
        q[(g, g)] += 2.0 * beta;
        q[(g + 1, g + 1)] += 2.0 * beta;
        q[(g, g + 1)] -= 2.0 * beta;
        q[(g + 1, g)] -= 2.0 * beta;
    }
    q
}

/// EM for the time-varying model with the temporal smoothness weight
/// `cfg.smoothness` on `sum_g ||A(s_{g+1}) - A(s_g)||_F^2`.
pub fn fit_tvhp(corpus: &Corpus, grid: &[f64], decay: f64, cfg: &LearnConfig) -> Result<TvhpFit> {
    let start = Instant::now();
    cfg.validate()?;
    check_grid(grid)?;
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(Error::InvalidInput(format!("decay must be positive, got {decay}")));
    }
    if cfg.penalty.effective() != crate::learn::PenaltyKind::None {
        return Err(Error::InvalidInput(
            "the time-varying model takes only the smoothness weight, not a structural penalty".into(),
        ));
    }
    check_corpus(corpus)?;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    for s in corpus.sequences() {
        if let Some(e) = s.events().iter().find(|e| e.time < lo || e.time > hi) {
            return Err(Error::InvalidInput(format!(
                "sequence `{}` has an event at {} outside the grid span [{lo}, {hi}]",
                s.id(),
                e.time
            )));
        }
    }
    let d = corpus.dim();
    let g = grid.len();
    let features = FeatureSet {
        dim: d,
        n_params: g * d,
        seqs: corpus.sequences().iter().map(|s| tvhp_features(s, grid, decay)).collect(),
    };
    let q = difference_matrix(g, cfg.smoothness);
    let (mu, w) = initial_params(corpus, g * d, cfg.seed);
    let out = grid_em(&features, &q, 1.0, &Penalty::none(), mu, w, cfg)?;
    let mut warnings = Vec::new();
    if out.bumped {
        let msg = "singular node update; added diagonal regularization".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let model = TvhpModel::new(out.mu, decay, grid.to_vec(), unstack_coeffs(&out.w, d))?;
    Ok(TvhpFit {
        model,
        objective_trace: out.trace,
        converged: out.converged,
        iterations: out.iterations,
        wall_time: start.elapsed().as_secs_f64(),
        clamped: out.clamped,
        warnings,
    })
}

/// Cluster-process sampler for the time-varying model on `[0, t_end]`:
/// each event at `s` of type `v` has `Poisson(a_vu(s) (1 - e^{-w (t_end - s)}))`
/// type-`u` children at truncated exponential lags.
pub fn simulate_tvhp(model: &TvhpModel, t_end: f64, n_sequences: usize, seed: u64) -> Result<Corpus> {
    let base = HawkesModel::poisson(model.mu.clone(), KernelSpec::exponential(model.decay))?;
    let cfg = SimConfig::new(base, t_end, n_sequences, seed);
    let d = model.dim();
    let w = model.decay;
    run_sequences(&cfg, |rng| {
        let mut events = Vec::new();
        for u in 0..d {
            let n = poisson_sample(rng, model.mu[u] * t_end);
            for _ in 0..n {
                events.push(Event::new(rng.random::<f64>() * t_end, u));
            }
        }
        let mut next = 0;
        while next < events.len() {
            if events.len() > cfg.max_events {
                return Err(events);
            }
            let parent = events[next];
            next += 1;
            let a = model.infectivity_at(parent.time);
            let mass = 1.0 - (-w * (t_end - parent.time)).exp();
            for u in 0..d {
                let n = poisson_sample(rng, a[(parent.mark, u)] * mass);
                for _ in 0..n {
                    // inverse CDF of the exponential truncated to the window
                    let lag = -(1.0 - rng.random::<f64>() * mass).ln() / w;
                    let t = (parent.time + lag).min(t_end);
                    events.push(Event::new(t, u));
                }
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(events)
    })
}
