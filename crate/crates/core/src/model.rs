//! Domain types: events, sequences and Hawkes models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub type Matrix = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub mark: usize,
}

impl Event {
    pub fn new(time: f64, mark: usize) -> Self {
        Event { time, mark }
    }
}

/// Time-ordered marked events observed on `[t_start, t_end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSequence {
    id: String,
    dim: usize,
    t_start: f64,
    t_end: f64,
    events: Vec<Event>,
}

impl EventSequence {
    /// Validating constructor; events must already be sorted by time.
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        t_start: f64,
        t_end: f64,
        events: Vec<Event>,
    ) -> Result<Self> {
        let seq = EventSequence {
            id: id.into(),
            dim,
            t_start,
            t_end,
            events,
        };
        seq.validate()?;
        Ok(seq)
    }

    /// Like [`EventSequence::new`] but sorts the events (stably) first.
    pub fn from_unsorted(
        id: impl Into<String>,
        dim: usize,
        t_start: f64,
        t_end: f64,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::new(id, dim, t_start, t_end, events)
    }

    pub fn empty(id: impl Into<String>, dim: usize, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(id, dim, t_start, t_end, Vec::new())
    }

    fn validate(&self) -> Result<()> {
        let id = &self.id;
        if self.dim == 0 {
            return Err(Error::Validation(format!("sequence `{id}`: dim must be >= 1")));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start <= self.t_end) {
            return Err(Error::Validation(format!(
                "sequence `{id}`: invalid window [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        let mut prev = self.t_start;
        for (i, e) in self.events.iter().enumerate() {
            if !e.time.is_finite() || e.time < 0.0 {
                return Err(Error::Validation(format!(
                    "sequence `{id}`: event {i} has invalid time {}",
                    e.time
                )));
            }
            if e.time < prev {
                return Err(Error::Validation(if i == 0 {
                    format!("sequence `{id}`: event at {} precedes t_start {}", e.time, self.t_start)
                } else {
                    format!("sequence `{id}`: events not sorted at index {i}")
                }));
            }
            if e.time > self.t_end {
                return Err(Error::Validation(format!(
                    "sequence `{id}`: event at {} is after t_end {}",
                    e.time, self.t_end
                )));
            }
            if e.mark >= self.dim {
                return Err(Error::Validation(format!(
                    "sequence `{id}`: mark {} out of range for dim {}",
                    e.mark, self.dim
                )));
            }
            prev = e.time;
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Number of events per mark.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for e in &self.events {
            c[e.mark] += 1;
        }
        c
    }
}

/// Baseline rates plus kernel coefficients.
///
/// `coeffs[k][(v, u)]` is the weight of kernel component `k` in the impact
/// of type-`v` events on type-`u` intensity. There is one matrix for the
/// exponential kernel, one per center for the basis kernel and one per lag
/// for the discretized kernel (where it is the kernel value on that cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct HawkesModel {
    mu: Vec<f64>,
    kernel: KernelSpec,
    coeffs: Vec<Matrix>,
}

impl HawkesModel {
    pub fn new(mu: Vec<f64>, kernel: KernelSpec, coeffs: Vec<Matrix>) -> Result<Self> {
        kernel.validate()?;
        let dim = mu.len();
        if dim == 0 {
            return Err(Error::InvalidInput("model needs at least one dimension".into()));
        }
        if mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidInput("baseline rates must be finite and >= 0".into()));
        }
        if coeffs.len() != kernel.n_components() {
            return Err(Error::InvalidInput(format!(
                "{} kernel needs {} coefficient matrices, got {}",
                kernel.type_name(),
                kernel.n_components(),
                coeffs.len()
            )));
        }
        for c in &coeffs {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "coefficient matrix is {}x{}, expected {dim}x{dim}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if c.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidInput("kernel coefficients must be finite and >= 0".into()));
            }
        }
        Ok(HawkesModel { mu, kernel, coeffs })
    }

    /// Exponential-kernel model; `infectivity` is the branching matrix.
    pub fn exponential(mu: Vec<f64>, decay: f64, infectivity: Matrix) -> Result<Self> {
        Self::new(mu, KernelSpec::exponential(decay), vec![infectivity])
    }

    /// Model with all kernel coefficients zero (a homogeneous Poisson process).
    pub fn poisson(mu: Vec<f64>, kernel: KernelSpec) -> Result<Self> {
        let d = mu.len();
        let k = kernel.n_components();
        Self::new(mu, kernel, vec![Matrix::zeros(d, d); k])
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    pub fn with_mu(&self, mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, self.kernel.clone(), self.coeffs.clone())
    }

    /// `phi_vu(t)`.
    pub fn kernel_value(&self, v: usize, u: usize, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let a = c[(v, u)];
                if a == 0.0 {
                    0.0
                } else {
                    a * self.kernel.component(k, t)
                }
            })
            .sum()
    }

    /// `int_0^t phi_vu`.
    pub fn kernel_integral(&self, v: usize, u: usize, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let a = c[(v, u)];
                if a == 0.0 {
                    0.0
                } else {
                    a * self.kernel.component_integral(k, t)
                }
            })
            .sum()
    }

    pub(crate) fn check_sequence(&self, seq: &EventSequence) -> Result<()> {
        if seq.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "model has dim {} but sequence `{}` has dim {}",
                self.dim(),
                seq.id(),
                seq.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffsFile {
    Matrix(Vec<Vec<f64>>),
    Stack(Vec<Vec<Vec<f64>>>),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    mu: Vec<f64>,
    kernel: KernelSpec,
    #[serde(rename = "A")]
    coeffs: CoeffsFile,
}

pub(crate) fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<Matrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Format(format!("expected a {dim}x{dim} matrix")));
    }
    Ok(Matrix::from_fn(dim, dim, |r, c| rows[r][c]))
}

impl From<HawkesModel> for ModelFile {
    fn from(m: HawkesModel) -> Self {
        let coeffs = match m.kernel {
            KernelSpec::Exponential { .. } => CoeffsFile::Matrix(matrix_to_rows(&m.coeffs[0])),
            _ => CoeffsFile::Stack(m.coeffs.iter().map(matrix_to_rows).collect()),
        };
        ModelFile {
            dim: m.mu.len(),
            mu: m.mu,
            kernel: m.kernel,
            coeffs,
        }
    }
}

impl TryFrom<ModelFile> for HawkesModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.mu.len() != f.dim {
            return Err(Error::Format(format!(
                "mu has {} entries but dim is {}",
                f.mu.len(),
                f.dim
            )));
        }
        let coeffs = match (&f.kernel, f.coeffs) {
            (KernelSpec::Exponential { .. }, CoeffsFile::Matrix(rows)) => {
                vec![rows_to_matrix(&rows, f.dim)?]
            }
            (KernelSpec::Exponential { .. }, CoeffsFile::Stack(stack)) if stack.len() == 1 => {
                vec![rows_to_matrix(&stack[0], f.dim)?]
            }
            (_, CoeffsFile::Stack(stack)) => stack
                .iter()
                .map(|rows| rows_to_matrix(rows, f.dim))
                .collect::<Result<_>>()?,
            (_, CoeffsFile::Matrix(rows)) if rows.is_empty() => Vec::new(),
            (k, CoeffsFile::Matrix(_)) => {
                return Err(Error::Format(format!(
                    "{} kernel expects A as a list of matrices",
                    k.type_name()
                )))
            }
        };
        HawkesModel::new(f.mu, f.kernel, coeffs).map_err(|e| Error::Format(e.to_string()))
    }
}
