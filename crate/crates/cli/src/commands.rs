use std::path::{Path, PathBuf};

use hawkes_core::analyze::{
    cluster_distance, cluster_mixture, distance_matrix, distance_matrix_csv, fit_tvhp, granger_graph, ClusterResult,
    DistanceParams, TvhpFit,
};
use hawkes_core::data::{load_corpus, load_model, save_corpus, save_model, split_train_test, Corpus};
use hawkes_core::evaluate::{compare_learners, heldout_loglik, rescaling_test, HeldoutLoglik, Learner, LearnerSpec};
use hawkes_core::io::{read_json, write_atomic, write_csv, write_json};
use hawkes_core::learn::{fit_ls, fit_mle, fit_mle_ode, FitReport, LearnConfig};
use hawkes_core::process::{intensity_samples, log_likelihood};
use hawkes_core::simulate::{benchmark_simulators, BenchCsvRow, Method, SimConfig};
use hawkes_core::{Error, HawkesModel, Result};
use serde::{Deserialize, Serialize};

use crate::options::{learner_name, LearnerKind, Resolved};
use crate::{
    BenchmarkArgs, Cli, ClusterArgs, ClusterMethod, Command, CostArgs, DistanceArgs, EvalArgs, FitArgs, GrangerArgs,
    SimulateArgs, TvhpArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a, cli.timing),
        Command::Granger(a) => granger(a, cli.timing),
        Command::Cluster(a) => cluster(a),
        Command::Distance(a) => distance(a),
        Command::Tvhp(a) => tvhp(a, cli.timing),
        Command::Eval(a) => eval(a, cli.timing),
        Command::Benchmark(a) => benchmark(a, cli.timing),
        Command::Demo(a) => crate::demo::run(&a.out, a.seed, cli.timing),
    }
}

/// Intensity sample row for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityRow {
    pub seq_id: String,
    pub t: f64,
    pub u: usize,
    pub lambda: f64,
}

pub fn intensity_rows(model: &HawkesModel, corpus: &Corpus, step: f64) -> Result<Vec<IntensityRow>> {
    let mut rows = Vec::new();
    for s in corpus.sequences() {
        for (t, u, lambda) in intensity_samples(model, s, step)? {
            rows.push(IntensityRow {
                seq_id: s.id().to_string(),
                t,
                u,
                lambda,
            });
        }
    }
    Ok(rows)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let mut cfg = SimConfig::new(model.clone(), a.t_end, a.n, a.seed);
    cfg.max_events = a.max_events;
    let corpus = Method::from(a.method).run(&cfg)?;
    if let Some(step) = a.intensity_grid {
        let rows = intensity_rows(&model, &corpus, step)?;
        let path = a.intensity_out.clone().unwrap_or_else(|| a.out.with_extension("intensity.csv"));
        write_csv(&path, &rows)?;
    }
    save_corpus(&corpus, &a.out)
}

/// Fit report with the settings that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    #[serde(flatten)]
    pub report: FitReport,
    pub config: Resolved,
}

pub fn run_learner(corpus: &Corpus, r: &Resolved, timing: bool) -> Result<FitReport> {
    let mut report = match r.learner {
        LearnerKind::Mle => fit_mle(corpus, &r.kernel, &r.learn)?,
        LearnerKind::MleOde => {
            let (step, len) = r.grid().expect("checked when resolving");
            fit_mle_ode(corpus, step, len, &r.learn)?
        }
        LearnerKind::Ls => {
            let (step, len) = r.grid().expect("checked when resolving");
            fit_ls(corpus, step, len, r.ridge, &r.learn)?
        }
    };
    if !timing {
        report.wall_time = 0.0;
    }
    Ok(report)
}

fn fit(a: &FitArgs, timing: bool) -> Result<()> {
    let resolved = a.options.clone().layered(a.config.as_deref())?.resolve()?;
    let corpus = load_corpus(&a.data)?;
    let report = run_learner(&corpus, &resolved, timing)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    save_model(&report.model, &a.out)?;
    if let Some(path) = &a.report {
        write_json(
            path,
            &FitOutput {
                report,
                config: resolved,
            },
        )?;
    }
    Ok(())
}

fn granger(a: &GrangerArgs, timing: bool) -> Result<()> {
    let resolved = a.options.clone().layered(a.config.as_deref())?.resolve()?;
    if resolved.learner == LearnerKind::Ls {
        return Err(Error::InvalidInput(
            "granger fits by likelihood; use --learner mle (continuous kernels) or mle-ode (grid)".into(),
        ));
    }
    let corpus = load_corpus(&a.data)?;
    let (graph, mut report) = granger_graph(&corpus, &resolved.kernel, &resolved.learn, a.threshold)?;
    if !timing {
        report.wall_time = 0.0;
    }
    write_json(&a.out, &graph)?;
    if let Some(path) = &a.dot {
        let labels = corpus.label_map().map(|l| l.to_vec());
        write_atomic(path, graph.to_dot(labels.as_deref()).as_bytes())?;
    }
    if let Some(path) = &a.report {
        write_json(
            path,
            &FitOutput {
                report,
                config: resolved,
            },
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub heldout_loglik: f64,
}

/// Cluster result with sequence ids and the settings used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub method: String,
    pub ids: Vec<String>,
    #[serde(flatten)]
    pub result: ClusterResult,
    pub config: Option<Resolved>,
    pub distance: Option<DistanceParams>,
    pub selection: Option<Vec<KScore>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub seq_id: String,
    pub cluster: usize,
}

impl From<CostArgs> for DistanceParams {
    fn from(c: CostArgs) -> Self {
        DistanceParams {
            time_cost: c.time_cost,
            mismatch_cost: c.mismatch_cost,
            indel_cost: c.indel_cost,
        }
    }
}

/// `sum_n log sum_k pi_k exp(ll_k(seq_n))` for a fitted mixture.
pub fn mixture_loglik(r: &ClusterResult, corpus: &Corpus) -> Result<f64> {
    let models = r
        .models
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("cluster result carries no models".into()))?;
    let mut total = 0.0;
    for s in corpus.sequences() {
        let terms = models
            .iter()
            .zip(&r.mixing)
            .map(|(m, p)| Ok(p.ln() + log_likelihood(m, s)?))
            .collect::<Result<Vec<f64>>>()?;
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
    }
    Ok(total)
}

fn mixture_config(r: &Resolved) -> Result<()> {
    if r.learner != LearnerKind::Mle {
        return Err(Error::InvalidInput(format!(
            "mixture clustering fits each cluster by mle; --learner {} is not supported",
            learner_name(r.learner)
        )));
    }
    Ok(())
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let ids: Vec<String> = corpus.sequences().iter().map(|s| s.id().to_string()).collect();
    let out = match a.method {
        ClusterMethod::Mixture => {
            let resolved = a.options.clone().layered(a.config.as_deref())?.resolve()?;
            mixture_config(&resolved)?;
            let (k, selection) = match (a.k, a.k_max) {
                (Some(k), _) => (k, None),
                (None, Some(k_max)) => {
                    let (train, test) = split_train_test(&corpus, a.train_ratio, resolved.learn.seed)?;
                    if k_max == 0 || k_max > train.len() || test.is_empty() {
                        return Err(Error::InvalidInput(format!(
                            "K selection needs 1 <= k-max <= {} training sequences and a nonempty test split",
                            train.len()
                        )));
                    }
                    let mut scores = Vec::new();
                    for k in 1..=k_max {
                        let r = cluster_mixture(&train, k, &resolved.kernel, &resolved.learn)?;
                        scores.push(KScore {
                            k,
                            heldout_loglik: mixture_loglik(&r, &test)?,
                        });
                    }
                    let best = scores
                        .iter()
                        .fold(&scores[0], |b, s| if s.heldout_loglik > b.heldout_loglik { s } else { b })
                        .k;
                    (best, Some(scores))
                }
                (None, None) => unreachable!("clap requires --k or --k-max"),
            };
            let result = cluster_mixture(&corpus, k, &resolved.kernel, &resolved.learn)?;
            ClusterOutput {
                method: "mixture".into(),
                ids,
                result,
                config: Some(resolved),
                distance: None,
                selection,
            }
        }
        ClusterMethod::Distance => {
            let k = a.k.ok_or_else(|| Error::InvalidInput("distance clustering needs --k".into()))?;
            let params = DistanceParams::from(a.costs);
            let seed = a.options.seed.unwrap_or(0);
            ClusterOutput {
                method: "distance".into(),
                ids,
                result: cluster_distance(&corpus, k, &params, seed)?,
                config: None,
                distance: Some(params),
                selection: None,
            }
        }
    };
    for w in &out.result.warnings {
        log::warn!("{w}");
    }
    if let Some(path) = &a.assignments {
        let rows: Vec<AssignmentRow> = out
            .ids
            .iter()
            .zip(&out.result.assignments)
            .map(|(id, &c)| AssignmentRow {
                seq_id: id.clone(),
                cluster: c,
            })
            .collect();
        write_csv(path, &rows)?;
    }
    write_json(&a.out, &out)
}

fn distance(a: &DistanceArgs) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let m = distance_matrix(&corpus, &a.costs.into())?;
    let ids: Vec<&str> = corpus.sequences().iter().map(|s| s.id()).collect();
    write_atomic(&a.out, &distance_matrix_csv(&ids, &m)?)
}

/// `count` evenly spaced nodes from the earliest window start to the latest end.
pub fn even_grid(corpus: &Corpus, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidInput("time grid needs at least 2 nodes".into()));
    }
    let lo = corpus.sequences().iter().map(|s| s.t_start()).fold(f64::INFINITY, f64::min);
    let hi = corpus.sequences().iter().map(|s| s.t_end()).fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(Error::InvalidInput("corpus has no observation span".into()));
    }
    Ok((0..count).map(|g| lo + (hi - lo) * g as f64 / (count - 1) as f64).collect())
}

fn tvhp(a: &TvhpArgs, timing: bool) -> Result<()> {
    let corpus = load_corpus(&a.data)?;
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => even_grid(&corpus, a.nodes)?,
    };
    let d = LearnConfig::default();
    let cfg = LearnConfig {
        max_iters: a.max_iters.unwrap_or(d.max_iters),
        tol: a.tol.unwrap_or(d.tol),
        seed: a.seed.unwrap_or(d.seed),
        smoothness: a.smoothness.unwrap_or(d.smoothness),
        ..d
    };
    let mut fit: TvhpFit = fit_tvhp(&corpus, &grid, a.decay, &cfg)?;
    if !timing {
        fit.wall_time = 0.0;
    }
    if let Some(path) = &a.long {
        write_csv(path, &fit.model.long_rows())?;
    }
    write_json(&a.out, &fit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub seq_id: String,
    pub loglik: f64,
    pub ks_statistic: Option<f64>,
    pub n_transformed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub heldout: HeldoutLoglik,
    pub sequences: Vec<SequenceScore>,
}

pub fn default_specs(seed: u64) -> Vec<LearnerSpec> {
    let config = LearnConfig {
        seed,
        ..LearnConfig::default()
    };
    vec![
        LearnerSpec {
            name: "mle".into(),
            learner: Learner::Mle {
                kernel: hawkes_core::KernelSpec::exponential(1.0),
                config: config.clone(),
            },
        },
        LearnerSpec {
            name: "mle-ode".into(),
            learner: Learner::Ode {
                step: 0.5,
                len: 10,
                config: config.clone(),
            },
        },
        LearnerSpec {
            name: "ls".into(),
            learner: Learner::Ls {
                step: 0.5,
                lags: 10,
                ridge: 0.0,
                config,
            },
        },
    ]
}

fn eval(a: &EvalArgs, timing: bool) -> Result<()> {
    let data = load_corpus(&a.data)?;
    if let Some(path) = &a.model {
        let model = load_model(path)?;
        let heldout = heldout_loglik(&model, &data)?;
        let sequences = data
            .sequences()
            .iter()
            .zip(&heldout.per_sequence)
            .map(|(s, &ll)| {
                let (ks, n) = if s.is_empty() {
                    (None, 0)
                } else {
                    let r = rescaling_test(&model, s)?;
                    (Some(r.ks_statistic), r.n_transformed)
                };
                Ok(SequenceScore {
                    seq_id: s.id().to_string(),
                    loglik: ll,
                    ks_statistic: ks,
                    n_transformed: n,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return write_json(&a.out, &ModelScore { heldout, sequences });
    }
    let (train, test) = match &a.test {
        Some(p) => (data, load_corpus(p)?),
        None => split_train_test(&data, a.train_ratio, a.seed)?,
    };
    let specs: Vec<LearnerSpec> = match &a.specs {
        Some(p) => read_json(p)?,
        None => default_specs(a.seed),
    };
    let truth = a.truth.as_deref().map(load_model).transpose()?;
    let rows = compare_learners(&train, &test, &specs, truth.as_ref(), timing);
    write_csv(&a.out, &rows)
}

fn benchmark(a: &BenchmarkArgs, timing: bool) -> Result<()> {
    let model = load_model(&a.model)?;
    let rows = benchmark_simulators(&model, &a.horizons, a.n, a.seed, timing)?;
    let csv: Vec<BenchCsvRow> = rows.iter().map(BenchCsvRow::from).collect();
    write_csv(&a.out, &csv)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(dir.to_path_buf())
}
