use std::fs;
use std::path::Path;
use std::process::Command;

use campaignctl::cli::{run, EXIT_CONFIG, EXIT_IO, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn campaignctl(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("campaignctl").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_baseline_with_fbs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = campaignctl(&["solve", "--config", "baseline_sis", "--method", "fbs", "--out", out]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("J=") && r.stdout.contains("residual=") && r.stdout.contains("iterations="));
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,i,s,lambda,u");
    assert_eq!(lines.len(), 5001 + 1);
}

#[test]
fn solve_sir_writes_sir_schema() {
    let dir = tempfile::tempdir().unwrap();
    let r = campaignctl(&["solve", "--config", "baseline_sir", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("t,s,i,r,lambda_s,lambda_r,u1,u2\n"));
}

#[test]
fn sweep_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let r = campaignctl(&[
        "sweep",
        "--param",
        "beta",
        "--values",
        "0.5,1,2",
        "--strategies",
        "optimal,none",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,strategy,J,converged,iterations");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.starts_with("beta,")));
}

#[test]
fn sweep_uses_config_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sis]\n[sweep]\nparam = b\nvalues = 5, 15\n[strategy]\nstrategies = none\n",
    );
    let r = campaignctl(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count(), 3);
}

#[test]
fn compare_puts_optimal_lowest() {
    let dir = tempfile::tempdir().unwrap();
    let r = campaignctl(&["compare", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let table = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let rows: Vec<(String, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    let best = rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(best.0, "optimal");
    assert!(dir.path().join("trajectory_heuristic.csv").exists());
}

#[test]
fn simulate_writes_mean_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sir]\n[abm]\nn_agents = 2000\nreplications = 3\ncontrols = constant\n[run]\nseed = 5\n",
    );
    let r = campaignctl(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let csv = fs::read_to_string(dir.path().join("abm.csv")).unwrap();
    assert!(csv.starts_with("t,s,i,r,u1,u2,stderr\n"));
    assert_eq!(csv.lines().count(), 5002);
    let again = campaignctl(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(again.code, EXIT_OK);
    assert_eq!(fs::read_to_string(dir.path().join("abm.csv")).unwrap(), csv);
}

#[test]
fn probe_reports_single_cluster_at_short_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sis]\nT = 0.1\n");
    let r = campaignctl(&[
        "probe-uniqueness",
        "--config",
        &cfg,
        "--guesses",
        "0;1;2;5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("clusters=1"), "{}", r.stdout);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(campaignctl(&[]).code, EXIT_USAGE);
    assert_eq!(campaignctl(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(campaignctl(&["solve", "--bogus"]).code, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(campaignctl(&["solve", "--method", "newton", "--out", out]).code, EXIT_USAGE);
    assert_eq!(campaignctl(&["sweep", "--out", out]).code, EXIT_USAGE);
    assert_eq!(campaignctl(&["--help"]).code, EXIT_OK);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["[sis]\ni0 = 1.5\n", "[sis]\n[sir]\n", "[sis]\nunknown = 3\n"] {
        let cfg = write_config(dir.path(), text);
        let r = campaignctl(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(r.code, EXIT_CONFIG, "{text}");
        assert!(r.stderr.contains("line"), "{}", r.stderr);
    }
    // Probability overflow in the simulator is a configuration error.
    let cfg = write_config(dir.path(), "[sis]\n[abm]\ndt_event = 5\n");
    assert_eq!(
        campaignctl(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]).code,
        EXIT_CONFIG
    );
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sis]\n[solver]\nmethod = fbs\nmax_iters = 2\n");
    let out = dir.path().to_str().unwrap();
    let r = campaignctl(&["solve", "--config", &cfg, "--out", out]);
    assert_eq!(r.code, EXIT_NOT_CONVERGED, "{}", r.stderr);
    assert!(dir.path().join("solution.csv").exists());
    let r = campaignctl(&["compare", "--config", &cfg, "--out", out]);
    assert_eq!(r.code, EXIT_NOT_CONVERGED);
    let r = campaignctl(&["sweep", "--config", &cfg, "--param", "b", "--values", "5,15", "--out", out]);
    assert_eq!(r.code, EXIT_NOT_CONVERGED);
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(campaignctl(&["solve", "--config", missing.to_str().unwrap()]).code, EXIT_IO);
    // An output "directory" that is a regular file.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(campaignctl(&["solve", "--out", blocker.to_str().unwrap()]).code, EXIT_IO);
}

#[test]
fn binary_honours_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_campaignctl");
    let status = Command::new(bin)
        .args(["solve", "--out", dir.path().to_str().unwrap()])
        .env("CAMPAIGNCTL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let status = Command::new(bin)
        .args(["solve", "--out", dir.path().to_str().unwrap()])
        .env("CAMPAIGNCTL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
}
