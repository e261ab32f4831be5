//! Fixed end-to-end pipeline on synthetic data. Writes one plot-data file per
//! panel and a manifest mapping panels to files.

use std::path::Path;

use hawkes_core::analyze::{cluster_mixture, distance_matrix, fit_tvhp, granger_graph, simulate_tvhp, DistanceParams, TvhpModel};
use hawkes_core::data::Corpus;
use hawkes_core::evaluate::{compare_learners, LearnerSpec};
use hawkes_core::io::{write_csv, write_json};
use hawkes_core::learn::{LearnConfig, Penalty};
use hawkes_core::rng::child_seed;
use hawkes_core::simulate::{benchmark_simulators, simulate_exact_exp, BenchCsvRow, SimConfig};
use hawkes_core::{HawkesModel, KernelSpec, Matrix, Result};
use serde::{Deserialize, Serialize};

use crate::commands::{default_specs, ensure_dir, intensity_rows};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub source: String,
    pub v: usize,
    pub u: usize,
    pub t: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub learner: String,
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvhpCurveRow {
    pub source: String,
    pub s: f64,
    pub v: usize,
    pub u: usize,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCellRow {
    pub row_id: String,
    pub col_id: String,
    pub row_cluster: usize,
    pub col_cluster: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub panel: String,
    pub file: String,
    pub format: String,
    /// CSV columns, or top-level JSON fields.
    pub fields: Vec<String>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub timing: bool,
    pub panels: Vec<Panel>,
}

fn panel(id: &str, file: &str, fields: &[&str], description: &str) -> Panel {
    let format = if file.ends_with(".json") { "json" } else { "csv" };
    Panel {
        panel: id.into(),
        file: file.into(),
        format: format.into(),
        fields: fields.iter().map(|s| s.to_string()).collect(),
        description: description.into(),
    }
}

pub fn truth_model() -> HawkesModel {
    HawkesModel::exponential(vec![0.3, 0.5], 1.0, Matrix::from_row_slice(2, 2, &[0.4, 0.0, 0.3, 0.3]))
        .expect("valid demo model")
}

fn ramp_model() -> TvhpModel {
    let grid: Vec<f64> = (0..5).map(|g| 25.0 * g as f64).collect();
    let nodes = grid.iter().map(|s| Matrix::from_element(1, 1, 0.2 + 0.6 * s / 100.0)).collect();
    TvhpModel::new(vec![0.5], 1.0, grid, nodes).expect("valid ramp model")
}

fn two_populations(seed: u64) -> Result<Corpus> {
    let mut seqs = Vec::new();
    for (g, mu) in [0.2, 2.0].into_iter().enumerate() {
        let m = HawkesModel::exponential(vec![mu], 1.0, Matrix::from_element(1, 1, 0.3))?;
        let c = simulate_exact_exp(&SimConfig::new(m, 50.0, 25, child_seed(seed, g as u64)))?;
        seqs.extend(c.into_sequences().into_iter().enumerate().map(|(i, s)| s.with_id(format!("pop{g}-{i:02}"))));
    }
    Corpus::from_sequences(1, seqs)
}

pub fn run(out: &Path, seed: u64, timing: bool) -> Result<()> {
    let dir = ensure_dir(out)?;
    let truth = truth_model();
    let train = simulate_exact_exp(&SimConfig::new(truth.clone(), 100.0, 60, child_seed(seed, 0)))?;
    let test = simulate_exact_exp(&SimConfig::new(truth.clone(), 100.0, 30, child_seed(seed, 1)))?;
    let mut panels = Vec::new();

    let first = Corpus::from_sequences(2, train.sequences()[..1].to_vec())?;
    write_csv(&dir.join("a_intensity.csv"), &intensity_rows(&truth, &first, 0.1)?)?;
    panels.push(panel(
        "a",
        "a_intensity.csv",
        &["seq_id", "t", "u", "lambda"],
        "intensity of one simulated sequence on a 0.1 grid",
    ));

    let bench = benchmark_simulators(&truth, &[50.0, 100.0, 200.0], 5, child_seed(seed, 2), timing)?;
    let bench: Vec<BenchCsvRow> = bench.iter().map(BenchCsvRow::from).collect();
    write_csv(&dir.join("b_benchmark.csv"), &bench)?;
    panels.push(panel(
        "b",
        "b_benchmark.csv",
        &["method", "t_end", "seed", "wall_time_s", "event_count"],
        "simulator runtime against horizon",
    ));

    let specs: Vec<LearnerSpec> = default_specs(seed);
    let mut kernels = Vec::new();
    let mut traces = Vec::new();
    let ts: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
    let mut push_kernels = |source: &str, m: &HawkesModel| {
        for v in 0..2 {
            for u in 0..2 {
                for &t in &ts {
                    kernels.push(KernelRow {
                        source: source.into(),
                        v,
                        u,
                        t,
                        phi: m.kernel_value(v, u, t),
                    });
                }
            }
        }
    };
    push_kernels("truth", &truth);
    for s in &specs {
        let r = s.learner.fit(&train)?;
        push_kernels(&s.name, &r.model);
        traces.extend(r.objective_trace.iter().enumerate().map(|(i, &o)| TraceRow {
            learner: s.name.clone(),
            iteration: i,
            objective: o,
        }));
    }
    write_csv(&dir.join("c_kernels.csv"), &kernels)?;
    panels.push(panel(
        "c",
        "c_kernels.csv",
        &["source", "v", "u", "t", "phi"],
        "true and estimated impact functions",
    ));

    let rows = compare_learners(&train, &test, &specs, Some(&truth), timing);
    write_csv(&dir.join("d_compare.csv"), &rows)?;
    panels.push(panel(
        "d",
        "d_compare.csv",
        &["name", "per_event_ll", "mu_relerr", "kernel_relerr", "wall_time_s", "iterations", "error"],
        "held-out likelihood and estimation error per learner",
    ));

    write_csv(&dir.join("e_traces.csv"), &traces)?;
    panels.push(panel(
        "e",
        "e_traces.csv",
        &["learner", "iteration", "objective"],
        "training objective per iteration",
    ));

    let cfg = LearnConfig {
        penalty: Penalty::sparse(5.0),
        seed,
        ..LearnConfig::default()
    };
    let (graph, _) = granger_graph(&train, &KernelSpec::exponential(1.0), &cfg, 0.05)?;
    write_json(&dir.join("f_granger.json"), &graph)?;
    panels.push(panel(
        "f",
        "f_granger.json",
        &["threshold", "infectivity", "adjacency"],
        "Granger causality graph of the event types",
    ));

    let ramp = ramp_model();
    let tv_data = simulate_tvhp(&ramp, 100.0, 100, child_seed(seed, 3))?;
    let tv_cfg = LearnConfig {
        seed,
        ..LearnConfig::default()
    };
    let fit = fit_tvhp(&tv_data, ramp.grid(), 1.0, &tv_cfg)?;
    let mut curves = Vec::new();
    for (source, m) in [("truth", &ramp), ("fit", &fit.model)] {
        curves.extend(m.long_rows().into_iter().map(|r| TvhpCurveRow {
            source: source.into(),
            s: r.s,
            v: r.v,
            u: r.u,
            a: r.a,
        }));
    }
    write_csv(&dir.join("g_tvhp.csv"), &curves)?;
    panels.push(panel(
        "g",
        "g_tvhp.csv",
        &["source", "s", "v", "u", "a"],
        "infectivity over time, true and estimated",
    ));

    let pops = two_populations(child_seed(seed, 4))?;
    let clusters = cluster_mixture(&pops, 2, &KernelSpec::exponential(1.0), &tv_cfg)?;
    let dist = distance_matrix(&pops, &DistanceParams::default())?;
    let mut order: Vec<usize> = (0..pops.len()).collect();
    order.sort_by_key(|&i| (clusters.assignments[i], i));
    let ids: Vec<&str> = pops.sequences().iter().map(|s| s.id()).collect();
    let mut cells = Vec::new();
    for &i in &order {
        for &j in &order {
            cells.push(ClusterCellRow {
                row_id: ids[i].into(),
                col_id: ids[j].into(),
                row_cluster: clusters.assignments[i],
                col_cluster: clusters.assignments[j],
                distance: dist[i][j],
            });
        }
    }
    write_csv(&dir.join("h_clusters.csv"), &cells)?;
    panels.push(panel(
        "h",
        "h_clusters.csv",
        &["row_id", "col_id", "row_cluster", "col_cluster", "distance"],
        "pairwise sequence distances ordered by mixture cluster",
    ));

    write_json(&dir.join("manifest.json"), &Manifest { seed, timing, panels })
}
