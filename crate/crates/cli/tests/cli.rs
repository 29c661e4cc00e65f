use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use rnls_core::io::{parse_config, read_field_for};
use rnls_core::reference::SechSolution;
use rnls_core::{Boundary, Grid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rnls-ground"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_TRAP: &str = r#"
[problem]
beta = -1.0
omega = 1.0
rotation = 0.3

[trap]
kind = "harmonic"
gammas = [1.0, 1.0]

[grid]
bounds = [[-4.0, 4.0], [-4.0, 4.0]]
modes = [32, 32]

[solver]
method = "pcg"
criterion = "energy"
tolerance = 1e-13

[energy_solver]
method = "pcg"
criterion = "energy"
tolerance = 1e-13

[initial]
kind = "e"

[sweep]
seeds = ["a", "b", "e"]
threads = 2

[bench]
methods = ["pbb", "pcg"]
rotations = [0.0, 0.3]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solves_the_soliton_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1");
    let config = repo_config("example1.toml");
    let o = run(&["solve", "-c", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(printed["action"], summary["action"]);
    let exact = SechSolution::new(1.0).unwrap().action();
    assert!((summary["action"].as_f64().unwrap() - exact).abs() <= 1e-9);
    assert_eq!(summary["regime"], "focusing");
    assert_eq!(summary["converged"], true);

    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("iteration,objective,residual,difference,step,elapsed"));
    assert_eq!(history.lines().count(), summary["iterations"].as_u64().unwrap() as usize + 2);

    let grid = Grid::new(&[(-32.0, 32.0)], &[1024], Boundary::Periodic).unwrap();
    let state = read_field_for(out.join("field.bin"), &grid).unwrap();
    assert!((state.norm_sqr() - summary["mass"].as_f64().unwrap()).abs() <= 1e-12);
    assert!(!out.join("density.csv").exists());
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_TRAP);
    let out = dir.path().join("flags");
    let o = run(&[
        "solve",
        "-c",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--method",
        "pbb",
        "--Omega",
        "-0.2",
        "--override",
        "output.density=true",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["method"], "pbb");
    assert_eq!(summary["rotation"].as_f64(), Some(-0.2));
    let density = std::fs::read_to_string(out.join("density.csv")).unwrap();
    assert!(density.starts_with("x,y,density"));
    assert_eq!(density.lines().count(), 32 * 32 + 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let unknown = write_config(dir.path(), "[problem]\nbeta = -1.0\nomega = 1.0\ncolour = 3\n");
    let o = run(&["solve", "-c", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration"));

    let o = run(&["solve", "-c", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let config = write_config(dir.path(), SMALL_TRAP);
    let out = dir.path().join("short");
    let o = run(&[
        "solve",
        "-c",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "solver.max_iterations=2",
    ]);
    assert_eq!(o.status.code(), Some(3));
    // artifacts of the unconverged run are still written
    assert_eq!(read_json(&out.join("summary.json"))["converged"], false);

    let o = run(&["solve", "-c", config.to_str().unwrap(), "--method", "newton"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_keeps_the_smallest_action() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_TRAP);
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "-c", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = read_json(&out.join("sweep.json"));
    let entries = sweep["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    let best = entries
        .iter()
        .map(|e| e["action"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(sweep["action"].as_f64(), Some(best));
    for seed in ["a", "b", "e"] {
        assert!(out.join(seed).join("summary.json").exists());
    }
}

#[test]
fn relation_matches_action_and_energy() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_TRAP);
    let out = dir.path().join("relation");
    let o = run(&["relation", "-c", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("relation.json"));
    assert!(r["action_gap"].as_f64().unwrap() <= 1e-7, "{r}");
    assert!(r["frequency_gap"].as_f64().unwrap() <= 1e-5, "{r}");
    assert!(out.join("action").join("field.bin").exists());
    assert!(out.join("energy").join("field.bin").exists());
}

#[test]
fn bench_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_TRAP);
    let out = dir.path().join("bench");
    let o = run(&["bench", "-c", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1 + 2 * 2);
}

#[test]
fn defaults_round_trip_through_the_parser() {
    let o = run(&["defaults"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    parse_config(&text).expect("reference config parses");
}

#[test]
fn checked_in_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let config = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            config.spec().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
