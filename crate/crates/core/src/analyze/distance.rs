//! Edit-alignment distance between marked event sequences.

use std::cmp::Ordering;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusterResult;
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::model::{Event, EventSequence};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceParams {
    /// Cost per time unit of moving a matched event.
    pub time_cost: f64,
    pub mismatch_cost: f64,
    pub indel_cost: f64,
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams {
            time_cost: 1.0,
            mismatch_cost: 1.0,
            indel_cost: 1.0,
        }
    }
}

impl DistanceParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("time_cost", self.time_cost),
            ("mismatch_cost", self.mismatch_cost),
            ("indel_cost", self.indel_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn cmp_events(a: &[Event], b: &[Event]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            let o = x.time.total_cmp(&y.time).then(x.mark.cmp(&y.mark));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

fn align(a: &[Event], b: &[Event], p: &DistanceParams) -> f64 {
    let m = b.len();
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64 * p.indel_cost).collect();
    let mut cur = vec![0.0; m + 1];
    for (i, ea) in a.iter().enumerate() {
        cur[0] = (i + 1) as f64 * p.indel_cost;
        for (j, eb) in b.iter().enumerate() {
            let mut matched = prev[j] + p.time_cost * (ea.time - eb.time).abs();
            if ea.mark != eb.mark {
                matched += p.mismatch_cost;
            }
            cur[j + 1] = matched.min(prev[j + 1] + p.indel_cost).min(cur[j] + p.indel_cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Minimal cost of a monotone alignment of the two time-ordered event lists.
/// The pair is put in a canonical order first so `d(a, b) == d(b, a)` holds
/// bit for bit.
pub fn sequence_distance(a: &EventSequence, b: &EventSequence, params: &DistanceParams) -> Result<f64> {
    params.validate()?;
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "sequences `{}` and `{}` have dims {} and {}",
            a.id(),
            b.id(),
            a.dim(),
            b.dim()
        )));
    }
    Ok(pair_distance(a.events(), b.events(), params))
}

fn pair_distance(a: &[Event], b: &[Event], params: &DistanceParams) -> f64 {
    match cmp_events(a, b) {
        Ordering::Greater => align(b, a, params),
        _ => align(a, b, params),
    }
}

/// Symmetric `N x N` matrix of pairwise distances with a zero diagonal.
pub fn distance_matrix(corpus: &Corpus, params: &DistanceParams) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let seqs = corpus.sequences();
    let n = seqs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| pair_distance(seqs[i].events(), seqs[j].events(), params))
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[i][j] = v;
        m[j][i] = v;
    }
    Ok(m)
}

/// CSV with a header row and a leading column of sequence ids.
pub fn distance_matrix_csv(ids: &[&str], matrix: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let mut header = vec!["id".to_string()];
    header.extend(ids.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(fmt)?;
    for (id, row) in ids.iter().zip(matrix) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(fmt)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// k-medoids with k-medoids++ seeding from `seed`.
pub fn cluster_distance(corpus: &Corpus, k: usize, params: &DistanceParams, seed: u64) -> Result<ClusterResult> {
    let n = corpus.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= number of sequences ({n}), got k = {k}"
        )));
    }
    let dm = distance_matrix(corpus, params)?;
    let mut rng = rng::seeded(seed);
    let mut medoids = vec![rng.random_range(0..n)];
    while medoids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let m = medoids.iter().map(|&c| dm[i][c]).fold(f64::INFINITY, f64::min);
                m * m
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    chosen = Some(i);
                    if r < *w {
                        break;
                    }
                    r -= w;
                }
            }
            chosen.expect("positive total weight")
        } else {
            (0..n).find(|i| !medoids.contains(i)).expect("k <= n")
        };
        medoids.push(pick);
    }
    let assign = |medoids: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if let Some(c) = medoids.iter().position(|&m| m == i) {
                    return c;
                }
                let mut best = 0;
                for c in 1..medoids.len() {
                    if dm[i][medoids[c]] < dm[i][medoids[best]] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    };
    let cost = |labels: &[usize], medoids: &[usize]| -> f64 { (0..n).map(|i| dm[i][medoids[labels[i]]]).sum() };
    let mut labels = assign(&medoids);
    let mut trace = vec![cost(&labels, &medoids)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < 100 {
        iterations += 1;
        let mut changed = false;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            let within = |j: usize| members.iter().map(|&i| dm[i][j]).sum::<f64>();
            let mut best = medoids[c];
            let mut best_cost = within(best);
            for &j in &members {
                let cj = within(j);
                if cj < best_cost {
                    best = j;
                    best_cost = cj;
                }
            }
            if best != medoids[c] {
                medoids[c] = best;
                changed = true;
            }
        }
        labels = assign(&medoids);
        trace.push(cost(&labels, &medoids));
        if !changed {
            converged = true;
            break;
        }
    }
    let responsibilities = labels
        .iter()
        .map(|&c| (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let mixing = (0..k)
        .map(|c| labels.iter().filter(|&&l| l == c).count() as f64 / n as f64)
        .collect();
    Ok(ClusterResult {
        k,
        responsibilities,
        assignments: labels,
        mixing,
        models: None,
        medoids: Some(medoids),
        objective_trace: trace,
        converged,
        iterations,
        warnings: Vec::new(),
    })
}
