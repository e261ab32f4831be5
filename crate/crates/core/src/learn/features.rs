//! Parameter-free per-event statistics.
//!
//! For fixed kernel hyperparameters the intensity is linear in the
//! parameters: `lambda_u(t_i) = mu[u] + sum_p x_i[p] * W[p][u]`, where
//! `p = k * D + v` indexes (kernel component, source type) and
//! `x_i[p] = sum_{t_j < t_i, m_j = v} b_k(t_i - t_j)`. The compensator is
//! likewise linear with exposure `e[p] = sum_{m_j = v} B_k(t_end - t_j)`.
//! Computing `x` and `e` once makes every EM iteration a pass of dot products.

use rayon::prelude::*;

use crate::data::Corpus;
use crate::kernel::KernelSpec;
use crate::model::{EventSequence, HawkesModel, Matrix};

#[derive(Clone, Debug)]
pub(crate) struct SequenceFeatures {
    pub marks: Vec<usize>,
    /// Row-major `n_events x n_params`.
    pub x: Vec<f64>,
    pub exposure: Vec<f64>,
    pub duration: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct FeatureSet {
    pub dim: usize,
    /// `K * D`
    pub n_params: usize,
    pub seqs: Vec<SequenceFeatures>,
}

impl FeatureSet {
    pub fn build(corpus: &Corpus, kernel: &KernelSpec) -> Self {
        let dim = corpus.dim();
        let seqs = corpus
            .sequences()
            .par_iter()
            .map(|s| sequence_features(s, kernel))
            .collect();
        FeatureSet {
            dim,
            n_params: kernel.n_components() * dim,
            seqs,
        }
    }
}

fn sequence_features(seq: &EventSequence, kernel: &KernelSpec) -> SequenceFeatures {
    let d = seq.dim();
    let k_count = kernel.n_components();
    let np = k_count * d;
    let events = seq.events();
    let n = events.len();
    let mut x = vec![0.0; n * np];
    match kernel {
        KernelSpec::Exponential { decay } => {
            let mut decayed = vec![0.0; d];
            let mut last = seq.t_start();
            let mut i = 0;
            while i < n {
                let t = events[i].time;
                let f = (-decay * (t - last)).exp();
                decayed.iter_mut().for_each(|r| *r *= f);
                last = t;
                let mut j = i;
                while j < n && events[j].time == t {
                    for v in 0..d {
                        x[j * np + v] = decay * decayed[v];
                    }
                    j += 1;
                }
                for e in &events[i..j] {
                    decayed[e.mark] += 1.0;
                }
                i = j;
            }
        }
        _ => {
            let support = kernel.support();
            let mut oldest = 0;
            for i in 0..n {
                let t = events[i].time;
                while oldest < i && t - events[oldest].time >= support {
                    oldest += 1;
                }
                let row = &mut x[i * np..(i + 1) * np];
                for e in &events[oldest..i] {
                    let lag = t - e.time;
                    if lag <= 0.0 {
                        continue;
                    }
                    for k in 0..k_count {
                        row[k * d + e.mark] += kernel.component(k, lag);
                    }
                }
            }
        }
    }
    let mut exposure = vec![0.0; np];
    for e in events {
        let rest = seq.t_end() - e.time;
        for k in 0..k_count {
            exposure[k * d + e.mark] += kernel.component_integral(k, rest);
        }
    }
    SequenceFeatures {
        marks: events.iter().map(|e| e.mark).collect(),
        x,
        exposure,
        duration: seq.duration(),
    }
}

/// Stack the model's coefficient matrices into the `n_params x D` layout.
pub(crate) fn stack_coeffs(model: &HawkesModel) -> Matrix {
    let d = model.dim();
    let k_count = model.coeffs().len();
    Matrix::from_fn(k_count * d, d, |p, u| model.coeffs()[p / d][(p % d, u)])
}

pub(crate) fn unstack_coeffs(w: &Matrix, dim: usize) -> Vec<Matrix> {
    let k_count = w.nrows() / dim;
    (0..k_count)
        .map(|k| Matrix::from_fn(dim, dim, |v, u| w[(k * dim + v, u)]))
        .collect()
}
