use std::path::{Path, PathBuf};
use std::process::Command;

use hawkes_core::data::{load_corpus, load_model, save_corpus, save_model, Corpus};
use hawkes_core::simulate::{simulate_exact_exp, SimConfig};
use hawkes_core::{HawkesModel, Matrix};
use serde_json::Value;

fn hawkes(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hawkes"))
        .args(args)
        .env_remove("HAWKES_THREADS")
        .output()
        .expect("run hawkes");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn ok(args: &[&str]) {
    let (code, err) = hawkes(args);
    assert_eq!(code, 0, "hawkes {args:?} failed: {err}");
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn model(&self, name: &str, m: &HawkesModel) -> String {
        save_model(m, &self.path(name)).unwrap();
        self.arg(name)
    }

    fn corpus(&self, name: &str, c: &Corpus) -> String {
        save_corpus(c, &self.path(name)).unwrap();
        self.arg(name)
    }
}

fn model_1d() -> HawkesModel {
    HawkesModel::exponential(vec![0.5], 1.0, Matrix::from_element(1, 1, 0.5)).unwrap()
}

fn diagonal() -> HawkesModel {
    HawkesModel::exponential(vec![0.4, 0.4], 1.0, Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).unwrap()
}

fn data(m: &HawkesModel, n: usize, seed: u64) -> Corpus {
    simulate_exact_exp(&SimConfig::new(m.clone(), 100.0, n, seed)).unwrap()
}

#[test]
fn simulate_writes_a_loadable_corpus() {
    let s = Scratch::new();
    let m = s.model("m.json", &model_1d());
    for method in ["branch", "ogata", "exact-exp"] {
        let out = s.arg(&format!("{method}.json"));
        ok(&["simulate", "--model", &m, "--method", method, "--t-end", "50", "--n", "4", "--seed", "1", "--out", &out]);
        let c = load_corpus(Path::new(&out)).unwrap();
        assert_eq!((c.len(), c.dim()), (4, 1));
        assert!(c.sequences().iter().all(|q| q.t_end() == 50.0));
        assert!(c.n_events() > 0);
    }
}

#[test]
fn unknown_method_is_a_usage_error_listing_the_choices() {
    let s = Scratch::new();
    let m = s.model("m.json", &model_1d());
    let (code, err) = hawkes(&["simulate", "--model", &m, "--method", "gillespie", "--t-end", "5", "--out", &s.arg("c.json")]);
    assert_eq!(code, 2);
    for name in ["branch", "ogata", "exact-exp"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!s.path("c.json").exists());
}

#[test]
fn simulate_is_byte_reproducible() {
    let s = Scratch::new();
    let m = s.model("m.json", &model_1d());
    for name in ["a.json", "b.json"] {
        ok(&["simulate", "--model", &m, "--t-end", "100", "--n", "5", "--seed", "9", "--out", &s.arg(name)]);
    }
    assert_eq!(std::fs::read(s.path("a.json")).unwrap(), std::fs::read(s.path("b.json")).unwrap());
}

#[test]
fn simulate_intensity_grid_defaults_next_to_corpus() {
    let s = Scratch::new();
    let m = s.model("m.json", &model_1d());
    ok(&["simulate", "--model", &m, "--t-end", "10", "--n", "2", "--out", &s.arg("c.json"), "--intensity-grid", "0.5"]);
    let text = std::fs::read_to_string(s.path("c.intensity.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seq_id,t,u,lambda"));
    assert_eq!(lines.count(), 2 * 21);
}

#[test]
fn fit_mle_converges_and_reports() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 50, 2));
    ok(&["fit", "--data", &c, "--learner", "mle", "--out", &s.arg("fit.json"), "--report", &s.arg("report.json")]);
    let r = json(&s.path("report.json"));
    assert_eq!(r["converged"], Value::Bool(true));
    let trace = r["objective_trace"].as_array().unwrap();
    assert_eq!(trace.len(), r["iterations"].as_u64().unwrap() as usize + 1);
    assert_eq!(r["wall_time"], 0.0);
    let m = load_model(&s.path("fit.json")).unwrap();
    assert!((m.mu()[0] - 0.5).abs() < 0.1);
}

#[test]
fn ls_fit_returns_a_discretized_kernel() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 20, 3));
    ok(&["fit", "--data", &c, "--learner", "ls", "--kernel", "grid", "--step", "0.5", "--len", "10", "--out", &s.arg("fit.json")]);
    assert_eq!(json(&s.path("fit.json"))["kernel"]["type"], "discretized");
}

#[test]
fn incompatible_learner_and_kernel_exit_2_with_guidance() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 5, 4));
    let (code, err) = hawkes(&["fit", "--data", &c, "--learner", "mle", "--kernel", "grid", "--out", &s.arg("a.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("fit_mle_ode or fit_ls"), "{err}");
    let (code, err) = hawkes(&["fit", "--data", &c, "--learner", "ls", "--kernel", "exp", "--out", &s.arg("b.json")]);
    assert_eq!(code, 2);
    assert!(err.contains("--kernel grid"), "{err}");
    assert!(!s.path("a.json").exists() && !s.path("b.json").exists());
}

#[test]
fn flags_override_config_file_and_resolved_config_is_echoed() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 10, 5));
    std::fs::write(s.path("cfg.toml"), "penalty = \"sparse\"\nweight = 2.0\nmax-iters = 7\ndecay = 2.0\n").unwrap();
    ok(&[
        "fit", "--data", &c, "--config", &s.arg("cfg.toml"), "--max-iters", "5", "--out", &s.arg("fit.json"), "--report",
        &s.arg("report.json"),
    ]);
    let cfg = &json(&s.path("report.json"))["config"];
    assert_eq!(cfg["learn"]["max_iters"], 5);
    assert_eq!(cfg["learn"]["penalty"]["kind"], "sparse");
    assert_eq!(cfg["learn"]["penalty"]["weight"], 2.0);
    assert_eq!(cfg["kernel"]["decay"], 2.0);
    assert_eq!(cfg["learn"]["tol"], 1e-6);

    std::fs::write(s.path("cfg.json"), r#"{"max-iters": 3}"#).unwrap();
    ok(&["fit", "--data", &c, "--config", &s.arg("cfg.json"), "--out", &s.arg("fit2.json"), "--report", &s.arg("r2.json")]);
    assert_eq!(json(&s.path("r2.json"))["config"]["learn"]["max_iters"], 3);

    std::fs::write(s.path("bad.json"), r#"{"max_iter": 3}"#).unwrap();
    let (code, _) = hawkes(&["fit", "--data", &c, "--config", &s.arg("bad.json"), "--out", &s.arg("fit3.json")]);
    assert_eq!(code, 2);
}

#[test]
fn granger_on_diagonal_truth_draws_only_self_loops() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&diagonal(), 100, 6));
    ok(&[
        "granger", "--data", &c, "--penalty", "sparse", "--weight", "300", "--out", &s.arg("g.json"), "--dot",
        &s.arg("g.dot"),
    ]);
    let dot = std::fs::read_to_string(s.path("g.dot")).unwrap();
    let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).map(|l| l.split('[').next().unwrap().trim()).collect();
    assert_eq!(edges, ["0 -> 0", "1 -> 1"], "{dot}");
}

#[test]
fn distance_of_a_single_sequence_is_zero() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 1, 7));
    ok(&["distance", "--data", &c, "--out", &s.arg("d.csv")]);
    let text = std::fs::read_to_string(s.path("d.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{text}");
    let cells: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[1], "0");
}

#[test]
fn eval_with_truth_fills_the_error_columns() {
    let s = Scratch::new();
    let truth = s.model("truth.json", &model_1d());
    let c = s.corpus("c.json", &data(&model_1d(), 30, 8));
    ok(&["eval", "--data", &c, "--truth", &truth, "--out", &s.arg("e.csv")]);
    let mut rdr = csv::Reader::from_path(s.path("e.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let mu = header.iter().position(|h| h == "mu_relerr").unwrap();
    let kernel = header.iter().position(|h| h == "kernel_relerr").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r[mu].parse::<f64>().is_ok() && r[kernel].parse::<f64>().is_ok(), "{r:?}");
    }

    ok(&["eval", "--data", &c, "--out", &s.arg("e2.csv")]);
    let mut rdr = csv::Reader::from_path(s.path("e2.csv")).unwrap();
    assert!(rdr.records().all(|r| r.unwrap()[mu].is_empty()));
}

#[test]
fn cluster_mixture_selects_k_and_writes_assignments() {
    let s = Scratch::new();
    let mut seqs = data(&HawkesModel::exponential(vec![0.2], 1.0, Matrix::from_element(1, 1, 0.3)).unwrap(), 20, 10)
        .into_sequences();
    let fast = data(&HawkesModel::exponential(vec![2.0], 1.0, Matrix::from_element(1, 1, 0.3)).unwrap(), 20, 11);
    seqs.extend(fast.into_sequences().into_iter().enumerate().map(|(i, q)| q.with_id(format!("fast{i:02}"))));
    let c = s.corpus("c.json", &Corpus::from_sequences(1, seqs).unwrap());
    ok(&[
        "cluster", "--data", &c, "--method", "mixture", "--k-max", "3", "--out", &s.arg("k.json"), "--assignments",
        &s.arg("k.csv"),
    ]);
    let r = json(&s.path("k.json"));
    assert!(r["k"].as_u64().unwrap() >= 2);
    assert_eq!(r["selection"].as_array().unwrap().len(), 3);
    let text = std::fs::read_to_string(s.path("k.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);

    ok(&["cluster", "--data", &c, "--method", "distance", "--k", "2", "--out", &s.arg("d.json")]);
    let assign = json(&s.path("d.json"))["assignments"].as_array().unwrap().clone();
    let slow = &assign[0];
    let same = (0..20).filter(|&i| &assign[i] == slow).count() + (20..40).filter(|&i| &assign[i] != slow).count();
    assert!(same >= 36, "{assign:?}");
}

#[test]
fn tvhp_and_benchmark_write_their_tables() {
    let s = Scratch::new();
    let c = s.corpus("c.json", &data(&model_1d(), 10, 12));
    ok(&["tvhp", "--data", &c, "--nodes", "3", "--out", &s.arg("tv.json"), "--long", &s.arg("tv.csv")]);
    let text = std::fs::read_to_string(s.path("tv.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("s,v,u,a"));
    assert_eq!(text.lines().count(), 4);

    let m = s.model("m.json", &model_1d());
    ok(&["benchmark", "--model", &m, "--horizons", "10,20", "--n", "2", "--out", &s.arg("b.csv")]);
    let text = std::fs::read_to_string(s.path("b.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn demo_manifest_lists_eight_panel_files() {
    let s = Scratch::new();
    ok(&["demo", "--out", &s.arg("demo"), "--seed", "4"]);
    let manifest = json(&s.path("demo").join("manifest.json"));
    let panels = manifest["panels"].as_array().unwrap();
    assert_eq!(panels.len(), 8);
    for p in panels {
        assert!(s.path("demo").join(p["file"].as_str().unwrap()).is_file(), "{p}");
    }
}

#[test]
fn thread_cap_of_zero_is_rejected() {
    let (code, _) = hawkes(&["--threads", "0", "benchmark", "--model", "none.json", "--out", "none.csv"]);
    assert_eq!(code, 2);
}
