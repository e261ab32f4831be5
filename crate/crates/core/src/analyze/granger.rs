use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::learn::{fit_mle, fit_mle_ode, FitReport, LearnConfig};
use crate::model::{matrix_to_rows, rows_to_matrix, Matrix};
use crate::process::branching_matrix;

pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Thresholded infectivity graph; the edge `v -> u` means type-`v` events
/// excite type-`u` events.
#[derive(Clone, Debug, PartialEq)]
pub struct GrangerGraph {
    pub threshold: f64,
    pub infectivity: Matrix,
    pub adjacency: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    threshold: f64,
    infectivity: Vec<Vec<f64>>,
    adjacency: Vec<Vec<bool>>,
}

impl Serialize for GrangerGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphFile {
            threshold: self.threshold,
            infectivity: matrix_to_rows(&self.infectivity),
            adjacency: self.adjacency.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GrangerGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = GraphFile::deserialize(d)?;
        let m = rows_to_matrix(&f.infectivity, f.infectivity.len()).map_err(serde::de::Error::custom)?;
        let g = GrangerGraph::from_infectivity(m, f.threshold);
        if g.adjacency != f.adjacency {
            return Err(serde::de::Error::custom("adjacency does not match infectivity and threshold"));
        }
        Ok(g)
    }
}

impl GrangerGraph {
    pub fn from_infectivity(infectivity: Matrix, threshold: f64) -> Self {
        let adjacency = (0..infectivity.nrows())
            .map(|v| (0..infectivity.ncols()).map(|u| infectivity[(v, u)] > threshold).collect())
            .collect();
        GrangerGraph {
            threshold,
            infectivity,
            adjacency,
        }
    }

    pub fn dim(&self) -> usize {
        self.infectivity.nrows()
    }

    /// `(source, target, weight)` for every edge, row-major.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for v in 0..d {
            for u in 0..d {
                if self.adjacency[v][u] {
                    out.push((v, u, self.infectivity[(v, u)]));
                }
            }
        }
        out
    }

    /// Graphviz digraph; nodes are named by `labels` when given.
    pub fn to_dot(&self, labels: Option<&[String]>) -> String {
        let name = |i: usize| match labels {
            Some(l) => format!("\"{}\"", l[i].replace('\\', "\\\\").replace('"', "\\\"")),
            None => i.to_string(),
        };
        let mut s = String::from("digraph granger {\n");
        for i in 0..self.dim() {
            let _ = writeln!(s, "  {};", name(i));
        }
        for (v, u, w) in self.edges() {
            let _ = writeln!(s, "  {} -> {} [label=\"{:.3}\"];", name(v), name(u), w);
        }
        s.push_str("}\n");
        s
    }
}

/// Reads the edges of a digraph written by [`GrangerGraph::to_dot`] as
/// `(source, target, label)` with node names unquoted.
pub fn parse_dot(text: &str) -> Result<Vec<(String, String, f64)>> {
    let body = text
        .trim()
        .strip_prefix("digraph")
        .and_then(|r| r.find('{').map(|i| &r[i + 1..]))
        .and_then(|r| r.rfind('}').map(|i| &r[..i]))
        .ok_or_else(|| Error::Format("not a digraph".into()))?;
    let unquote = |s: &str| -> String {
        let s = s.trim();
        match s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
            Some(inner) => inner.replace("\\\"", "\"").replace("\\\\", "\\"),
            None => s.to_string(),
        }
    };
    let mut edges = Vec::new();
    for stmt in body.split(";\n").map(str::trim).filter(|s| !s.is_empty()) {
        let stmt = stmt.trim_end_matches(';');
        let Some((lhs, rest)) = stmt.split_once(" -> ") else {
            continue;
        };
        let (rhs, attrs) = rest
            .split_once(" [")
            .ok_or_else(|| Error::Format(format!("edge without label: {stmt}")))?;
        let label = attrs
            .split_once("label=\"")
            .and_then(|(_, r)| r.split_once('"'))
            .map(|(l, _)| l)
            .ok_or_else(|| Error::Format(format!("edge without label: {stmt}")))?;
        let w = label
            .parse()
            .map_err(|_| Error::Format(format!("bad edge label `{label}`")))?;
        edges.push((unquote(lhs), unquote(rhs), w));
    }
    Ok(edges)
}

/// Fits with the configured penalty and thresholds the branching matrix.
/// Discretized templates are fitted on their grid by the curvature-penalized
/// learner.
pub fn granger_graph(corpus: &Corpus, kernel: &KernelSpec, cfg: &LearnConfig, threshold: f64) -> Result<(GrangerGraph, FitReport)> {
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidInput(format!("threshold must be finite and >= 0, got {threshold}")));
    }
    let report = match *kernel {
        KernelSpec::Discretized { step, len } => fit_mle_ode(corpus, step, len, cfg)?,
        _ => fit_mle(corpus, kernel, cfg)?,
    };
    let graph = GrangerGraph::from_infectivity(branching_matrix(&report.model), threshold);
    Ok((graph, report))
}
