//! End-to-end tests of the `swarmfp` binary and the experiment runner.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swarmfp_cli::output::{read_csv, Summary};
use swarmfp_cli::{parse_config, parse_config_str, preset_config, resolved_config, run_experiment};
use swarmfp_core::{fit_rate, RateModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swarmfp"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("swarmfp-cli-{}-{tag}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_config(dir: &Path, text: &str) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, text).unwrap();
    bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.join("out")).output().unwrap()
}

const SMALL: &str = "
model.lambda = 0.5
model.mu = 0.5
model.sigma2 = 1
model.delta = 1
init.kind = gaussian
init.center = 2
init.variance = 0.25
grid.xmin = -12
grid.xmax = 12
grid.n = 240
time.dt = 1e-2
time.t_final = 1
time.cadence = 0.1
output.snapshots =
";

#[test]
fn empty_snapshot_list_writes_only_diagnostics_summary_and_config() {
    let dir = scratch("empty");
    let out = run_config(&dir, SMALL);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> =
        std::fs::read_dir(dir.join("out")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["config.resolved", "diagnostics.csv", "summary.txt"]);
    let summary = Summary::parse(&std::fs::read_to_string(dir.join("out/summary.txt")).unwrap());
    assert_eq!(summary.get("status"), Some("ok"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = scratch("resolved");
    let text = SMALL.replace("output.snapshots =", "output.snapshots = 0,0.5,1");
    let first = run_experiment(&parse_config_str(&text).unwrap(), &dir.join("a")).unwrap();
    let spec = parse_config(&dir.join("a/config.resolved")).unwrap();
    assert_eq!(resolved_config(&spec), std::fs::read_to_string(dir.join("a/config.resolved")).unwrap());
    let second = run_experiment(&spec, &dir.join("b")).unwrap();
    for name in ["diagnostics.csv", "snapshot_t0.5.csv", "summary.txt"] {
        let a = std::fs::read(dir.join("a").join(name)).unwrap();
        let b = std::fs::read(dir.join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between the run and its resolved rerun");
    }
    assert_eq!(first.summary, second.summary);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn diagnostics_csv_is_lossless() {
    let dir = scratch("lossless");
    let report = run_experiment(&parse_config_str(SMALL).unwrap(), &dir).unwrap();
    let table = read_csv(&dir.join("diagnostics.csv")).unwrap();
    let tr = &report.runs[0].output.trajectory;
    assert_eq!(table.rows.len(), tr.len());
    for (row, r) in table.rows.iter().zip(tr) {
        assert_eq!(row.as_slice(), r.to_array().as_slice());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rates_subcommand_fits_a_column_and_names_columns_on_error() {
    let dir = scratch("rates");
    let text = SMALL.replace("time.t_final = 1", "time.t_final = 8");
    let out = run_config(&dir, &text);
    assert!(out.status.success());
    let csv = dir.join("out/diagnostics.csv");

    let ok = bin()
        .args(["rates", "--file"])
        .arg(&csv)
        .args(["--column", "mean", "--window", "4:8", "--model", "exp"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let fit = Summary::parse(&String::from_utf8(ok.stdout).unwrap());
    let rate = fit.get_f64("rate").unwrap();
    assert!((rate - 0.5).abs() < 0.01, "rate {rate}");

    let bad = bin().args(["rates", "--file"]).arg(&csv).args(["--column", "nope", "--window", "4:8"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8(bad.stderr).unwrap();
    assert!(err.contains("nope") && err.contains("H_finf_fq") && err.contains("mean"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_config_exits_with_error() {
    let dir = scratch("invalid");
    let out = run_config(&dir, &SMALL.replace("model.mu = 0.5", "model.mu = 0.6"));
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
    let out = run_config(&dir, &format!("{SMALL}model.gamma = 1\n"));
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn positivity_loss_exits_nonzero() {
    // Centered fluxes at cell Peclet numbers far above 2 lose positivity.
    let dir = scratch("violation");
    let text = SMALL
        .replace("grid.n = 240", "grid.n = 24")
        .replace("time.dt = 1e-2", "time.dt = 0.1")
        .replace("init.variance = 0.25", "init.variance = 0.01")
        + "solver.rule = centered\n";
    let out = run_config(&dir, &text);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stderr).unwrap().contains("negative density"));
    let ok = run_config(&dir, &text.replace("solver.rule = centered", "solver.rule = chang_cooper"));
    assert_eq!(ok.status.code(), Some(0));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn masses_subcommand_prints_weights() {
    let out = bin().args(["masses", "--sigma2", "1", "--delta", "1"]).output().unwrap();
    assert!(out.status.success());
    let s = Summary::parse(&String::from_utf8(out.stdout).unwrap());
    assert!((s.get_f64("m1").unwrap() - 1.2480).abs() < 5e-5);
    assert!((s.get_f64("m2").unwrap() - 0.6040).abs() < 5e-5);
}

#[test]
fn unknown_preset_lists_the_names() {
    let out = bin().args(["preset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("steady-check"));
}

/// H(f_inf | f_q(t)) is the divergence between f_inf and a copy translated by a
/// shift proportional to e^{-lambda t}; it is quadratic in the shift, so it
/// decays at twice the mean-relaxation rate.
#[test]
fn quasi_to_steady_entropy_decays_at_twice_lambda() {
    for lambda in [0.5, 0.8] {
        let mu = 1.0 - lambda;
        let text = preset_config("convergence")
            .unwrap()
            .replace("model.lambda = 0.5", &format!("model.lambda = {lambda}"))
            .replace("model.mu = 0.5", &format!("model.mu = {mu}"))
            .replace("time.dt = 1e-3", "time.dt = 1e-2")
            .replace("grid.n = 1200", "grid.n = 600");
        let spec = parse_config_str(&text).unwrap();
        assert_eq!(spec.params.lambda(), lambda);
        let dir = scratch(&format!("quasi-{lambda}"));
        let report = run_experiment(&spec, &dir).unwrap();
        let series: Vec<(f64, f64)> = report.runs[0].output.trajectory.iter().map(|r| (r.t, r.h_finf_fq)).collect();
        let fit = fit_rate(&series, (2.0 / lambda, 10.0), RateModel::Exponential).unwrap();
        assert!((fit.rate - 2.0 * lambda).abs() <= 0.02 * 2.0 * lambda, "lambda {lambda}: rate {}", fit.rate);
        assert!(fit.residual < 0.1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
