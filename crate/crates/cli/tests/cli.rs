use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splitwave::harness::fit_slope;
use splitwave_cli::output::read_snapshot;
use tempfile::TempDir;

fn splitwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitwave"))
        .args(args)
        .env_remove("SPLITWAVE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_with(config: &str, args: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, config);
    let out_dir = dir.path().join("out");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let out = splitwave(&full);
    (dir, out)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

fn csv_rows(dir: &Path, name: &str) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(dir.join("out").join(name)).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

const CASE1: &str = r#"
[problem]
kind = "linear"
domain = [[0.0, 1.0]]
points = [128]
potential = { name = "cos2pi" }
initial = { name = "quartic" }

[stepping]
tau = 0.01
t_end = 0.1

[output]
snapshot_times = [0.05]
"#;

const CASE2_EPS: &str = r#"
[problem]
kind = "linear"
domain = [[0.0, 6.283185307179586]]
points = [32]
potential = { name = "sine" }
initial = { name = "rational-sine" }

[stepping]
tau = 0.01

[experiment]
eps = [0.5, 0.25, 0.125]
horizon_t = 2.0
horizon_power = 1

[reference]
method = "exact"
points = [32]
"#;

#[test]
fn simulate_writes_snapshots_and_manifest() {
    let (dir, out) = run_with(CASE1, &["simulate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["derived"]["h"][0].as_f64().unwrap(), 1.0 / 128.0);
    assert_eq!(m["derived"]["mu1"].as_f64().unwrap(), 2.0 * std::f64::consts::PI);
    assert_eq!(m["derived"]["k_max"].as_u64().unwrap(), 4);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let bytes = fs::read(dir.path().join("out/snapshot_0001.bin")).unwrap();
    let (header, values) = read_snapshot(&bytes).unwrap();
    assert!((header.time - 0.1).abs() < 1e-12);
    assert_eq!(values.len(), 128);
    assert_eq!(header.problem_hash, m["problem_hash"].as_str().unwrap());
    // norm is conserved by every step
    let norm = |v: &[(f64, f64)]| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>();
    let first = read_snapshot(&fs::read(dir.path().join("out/snapshot_0000.bin")).unwrap()).unwrap().1;
    assert!((norm(&first) / norm(&values) - 1.0).abs() < 1e-13);
}

#[test]
fn zero_steps_reproduce_the_sampled_datum() {
    let cfg = CASE1.replace("t_end = 0.1", "t_end = 0.0").replace("snapshot_times = [0.05]", "");
    let (dir, out) = run_with(&cfg, &["simulate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (_, values) = read_snapshot(&fs::read(dir.path().join("out/snapshot_0000.bin")).unwrap()).unwrap();
    for (j, (re, im)) in values.iter().enumerate() {
        let x = j as f64 / 128.0;
        assert_eq!(*re, 5.0 * x * x * (1.0 - x) * (1.0 - x));
        assert_eq!(*im, 0.0);
    }
}

#[test]
fn resonant_step_under_the_diophantine_rule_exits_3() {
    let cfg = CASE2_EPS.replace(
        "tau = 0.01",
        "rule = { variant = \"diophantine\", tau = 6.283185307179586 }\nt_end = 6.283185307179586",
    );
    let (_dir, out) = run_with(&cfg, &["simulate"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn suggested_rule_step_runs() {
    let cfg = CASE2_EPS.replace(
        "tau = 0.01",
        "rule = { variant = \"diophantine\", tau = 6.2, suggest = true, radius = 0.5 }\nt_end = 0.0",
    );
    let (dir, out) = run_with(&cfg, &["simulate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["derived"]["verdicts"][0]["diophantine"], true);
}

#[test]
fn eps_scaling_table() {
    let (dir, out) = run_with(CASE2_EPS, &["experiment", "eps-scaling"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(dir.path(), "eps-scaling.csv");
    assert_eq!(header, "eps,t_final,eH1,ratio");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][3], "");
    assert!(rows[1][3].parse::<f64>().is_ok() && rows[2][3].parse::<f64>().is_ok());
    assert_eq!(rows[2][1].parse::<f64>().unwrap(), 16.0);
    let m = manifest(dir.path());
    assert_eq!(m["outputs"][0]["rows"].as_u64().unwrap(), 3);
    assert_eq!(m["derived"]["verdicts"][0]["small_step"], true);
}

#[test]
fn identical_configs_give_identical_tables() {
    let (a, _) = run_with(CASE2_EPS, &["experiment", "eps-scaling"]);
    let (b, _) = run_with(CASE2_EPS, &["experiment", "eps-scaling"]);
    let read = |d: &TempDir| fs::read(d.path().join("out/eps-scaling.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn converge_time_table_shows_second_order() {
    let cfg = format!(
        "{}\n[experiment]\ntaus = [0.02, 0.01, 0.005, 0.0025]\nt_eval = 1.0\n\n[reference]\nmethod = \"exact\"\npoints = [32]\n",
        CASE2_EPS.split("[experiment]").next().unwrap()
    );
    let (dir, out) = run_with(&cfg, &["experiment", "converge-time"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(dir.path(), "converge-time.csv");
    assert_eq!(header, "param,eL2,eH1");
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[2].parse().unwrap())).collect();
    let slope = fit_slope(&pts).unwrap().slope;
    assert!((slope - 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn every_experiment_kind_writes_its_schema() {
    let base = CASE2_EPS.split("[experiment]").next().unwrap();
    let reference = "\n[reference]\nmethod = \"exact\"\npoints = [32]\n";
    let cases = [
        ("err-growth", "taus = [0.02, 0.01]\nt_end = 0.2\nsample_every = 0.1", "tau,t,eL2,eH1,eL2max,eH1max", 6),
        ("converge-space", "points = [8, 16, 32]\nt_eval = 0.1", "param,eL2,eH1", 3),
        ("local-probe", "taus = [0.01, 0.005]", "tau,onestep_err,F_norm,ratio", 2),
        ("twist", "eps = [0.5, 0.25]\nhorizon_t = 0.5\nhorizon_power = 1", "eps,diagnostic", 2),
    ];
    for (kind, ex, header, n) in cases {
        let cfg = format!("{base}\n[experiment]\n{ex}\n{reference}");
        let (dir, out) = run_with(&cfg, &["experiment", kind]);
        assert_eq!(code(&out), 0, "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        let (h, rows) = csv_rows(dir.path(), &format!("{kind}.csv"));
        assert_eq!(h, header);
        assert_eq!(rows.len(), n, "{kind}");
        assert_eq!(manifest(dir.path())["outputs"][0]["rows"].as_u64().unwrap(), n as u64);
        for cell in rows.iter().flatten().filter(|c| !c.is_empty()) {
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.len(), 18, "{cell}");
        }
    }
}

#[test]
fn empty_lists_and_bad_configs_exit_2() {
    let (_d, out) = run_with(&CASE2_EPS.replace("eps = [0.5, 0.25, 0.125]", "eps = []"), &["experiment", "eps-scaling"]);
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with(&CASE1.replace("t_end = 0.1", "t_end = 0.1\nsteps = 3"), &["simulate"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("steps"));
    let (_d, out) = run_with(&CASE1.replace("t_end = 0.1", "t_end = 0.105"), &["simulate"]);
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with(CASE1, &["experiment", "twist"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&splitwave(&["simulate"])), 2);
    assert_eq!(code(&splitwave(&["simulate", "--config", "/nonexistent/run.toml"])), 2);
}

#[test]
fn overflowing_nonlinearity_exits_4() {
    let cfg = r#"
[problem]
kind = "nlse"
domain = [[0.0, 1.0]]
points = [16]
nonlinearity = { strength = 1e307 }
initial = { name = "quartic", params = { amplitude = 1e6 } }

[stepping]
tau = 0.01
t_end = 0.1
"#;
    let (_d, out) = run_with(cfg, &["simulate"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reference_command_writes_fine_grid_snapshots() {
    let cfg = CASE2_EPS.replace(
        "method = \"exact\"\npoints = [32]",
        "method = \"splitting\"\npoints = [64]\ntau = 0.001",
    ) + "\n[output]\nsnapshot_times = [0.5, 1.0]\n";
    let (dir, out) = run_with(&cfg, &["reference"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (h, v) = read_snapshot(&fs::read(dir.path().join("out/reference_0001.bin")).unwrap()).unwrap();
    assert_eq!(h.grid[0].n, 64);
    assert_eq!(v.len(), 64);
    assert!((h.time - 1.0).abs() < 1e-12);
    assert_eq!(manifest(dir.path())["scheme"], "triple-jump");
}

#[test]
fn check_step_verdicts() {
    let out = splitwave(&["check-step", "--tau", "0.1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("small-step: admissible"), "{text}");
    assert!(text.contains("K_max = 4"));

    let out = splitwave(&["check-step", "--tau", "6.283185307179586"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("diophantine: inadmissible"));

    let out = splitwave(&["check-step", "--tau", "6.283185307179586", "--suggest"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("suggested tau = "));

    assert_eq!(code(&splitwave(&["check-step", "--tau", "-1"])), 2);
    assert_eq!(code(&splitwave(&["check-step", "--tau", "0.1", "--alpha", "2"])), 2);
    assert_eq!(code(&splitwave(&["check-step", "--tau", "0.1", "--bogus"])), 2);
}

#[test]
fn thread_settings() {
    let out = splitwave(&["--threads", "2", "check-step", "--tau", "0.1"]);
    assert_eq!(code(&out), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_splitwave"))
        .args(["check-step", "--tau", "0.1"])
        .env("SPLITWAVE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert_eq!(code(&splitwave(&["--threads", "0", "check-step", "--tau", "0.1"])), 2);
}

#[test]
fn unfused_simulation_matches_fused() {
    let unfused = CASE1.replace("[stepping]", "[scheme]\norder = 4\nfuse = false\n\n[stepping]");
    let fused = CASE1.replace("[stepping]", "[scheme]\norder = 4\n\n[stepping]");
    let last = |cfg: &str| {
        let (dir, out) = run_with(cfg, &["simulate"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        read_snapshot(&fs::read(dir.path().join("out/snapshot_0001.bin")).unwrap()).unwrap().1
    };
    for ((a, b), (c, d)) in last(&unfused).into_iter().zip(last(&fused)) {
        assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
    }
}
