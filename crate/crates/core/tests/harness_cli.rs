use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use tvfb::harness::{
    cmd_run, cmd_sweep, execute, metrics_csv, Axis, ExperimentConfig, SweepSpec, METADATA_HEADER,
};

const METRICS_HEADER_LINE: &str = "k,t_total,dist_to_opt,gap,consensus_err,wall_ns";

fn tvfb(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tvfb"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn in_dir(dir: &TempDir, mut cfg: ExperimentConfig) -> ExperimentConfig {
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    cfg.output.metrics = p("metrics.csv");
    cfg.output.metadata = p("metadata.csv");
    cfg.output.verify = p("verify.csv");
    cfg.output.sweep = p("sweep.csv");
    cfg
}

#[test]
fn metrics_header_is_stable() {
    let out = execute(
        &ExperimentConfig::small_fixture()
            .with_overrides(&["algorithm.k=3"])
            .unwrap(),
    )
    .unwrap();
    let csv = metrics_csv(&out.rows);
    assert_eq!(csv.lines().next().unwrap(), METRICS_HEADER_LINE);
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(
        METADATA_HEADER.join(","),
        "K,T,r,chi,sigma,seed,schedule_variant,metric_mode,n,graph_seed,graph_schedule,churn_rate,center_seed"
    );
}

#[test]
fn default_run_writes_thirty_finite_decreasing_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = in_dir(&dir, ExperimentConfig::default());
    cmd_run(&cfg).unwrap();
    let text = std::fs::read_to_string(&cfg.output.metrics).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r[2].is_finite() && r[3].is_finite()));
    assert!(rows[29][2] < rows[0][2]);
    assert!(rows[29][3] < rows[0][3]);
    let meta = std::fs::read_to_string(&cfg.output.metadata).unwrap();
    assert!(meta.lines().nth(1).unwrap().starts_with("30,10,0.001,"));
}

#[test]
fn repeated_runs_and_sweeps_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut cfg = in_dir(&dir, ExperimentConfig::default());
    cfg.graph.schedule = tvfb::harness::GraphSchedule::Churn;
    cmd_run(&cfg).unwrap();
    let first = std::fs::read(&cfg.output.metrics).unwrap();
    cmd_run(&cfg).unwrap();
    assert_eq!(first, std::fs::read(&cfg.output.metrics).unwrap());

    let spec = SweepSpec {
        axis: Axis::Sigma,
        values: vec![0.5, 0.0, 0.25],
        repeats: 4,
    };
    let cells = dir.path().join("cells.csv").to_string_lossy().into_owned();
    cmd_sweep(&cfg, &spec, Some(&cells)).unwrap();
    let a = (
        std::fs::read(&cfg.output.sweep).unwrap(),
        std::fs::read(&cells).unwrap(),
    );
    cmd_sweep(&cfg, &spec, Some(&cells)).unwrap();
    let b = (
        std::fs::read(&cfg.output.sweep).unwrap(),
        std::fs::read(&cells).unwrap(),
    );
    assert_eq!(a, b);
}

#[test]
fn cli_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (code, _, err) = tvfb(
        &["run", "--set", "algorithm.k=0", "--out", "k0.csv"],
        dir.path(),
    );
    assert_eq!(code, 2, "{err}");
    assert!(!dir.path().join("k0.csv").exists());

    let (code, _, _) = tvfb(&["run", "--set", "no_such.key=1"], dir.path());
    assert_eq!(code, 2);

    let (code, _, err) = tvfb(
        &["verify", "--set", "graph.n=6", "--set", "graph.p=0.01"],
        dir.path(),
    );
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("Erdős–Rényi"));

    let (code, out, err) = tvfb(&["verify", "--set", "graph.topology=complete"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
    let table = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(table.starts_with("check,value,threshold,pass\nchi,1,"));

    let (code, _, _) = tvfb(&["sweep", "--axis", "K", "--values", "1.5"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn cli_config_round_trips_through_a_file() {
    let dir = TempDir::new().unwrap();
    let (code, text, _) = tvfb(
        &[
            "config",
            "--set",
            "algorithm.k=4",
            "--set",
            "problem.r_xi=0.5",
            "--set",
            "problem.r_zeta=2.0",
        ],
        dir.path(),
    );
    assert_eq!(code, 0);
    let parsed = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(parsed.algorithm.k, 4);
    std::fs::write(dir.path().join("c.toml"), &text).unwrap();
    let (code, again, _) = tvfb(&["config", "-c", "c.toml"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(again, text);
    let (code, out, err) = tvfb(&["run", "-c", "c.toml"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("K=4 "));
}
