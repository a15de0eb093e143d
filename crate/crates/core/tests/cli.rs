use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &[&str] = &[
    "--set", "grid.n_theta=8",
    "--set", "grid.n_phi=16",
    "--set", "grid.cone_steps=64",
    "--set", "grid.trapped_n_u=4",
    "--set", "grid.trapped_n_ubar=3",
    "--set", "horizon.n_window=3",
    "--set", "horizon.n_transition=1",
    "--set", "horizon.n_tail=1",
];

fn motslab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motslab"))
        .args(args)
        .args(SMALL)
        .arg("--out")
        .arg(out)
        .env_remove("MOTSLAB_OUT_DIR")
        .output()
        .unwrap()
}

fn last_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    serde_json::from_str(text.lines().last().expect("some output")).unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = motslab(dir.path(), &["gen-data"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(last_json(&o)["kind"], "config");
}

#[test]
fn downstream_without_upstream_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = motslab(dir.path(), &["find-mots", "--set", "seed=1"]);
    assert_eq!(o.status.code(), Some(2));
    let v = last_json(&o);
    assert_eq!(v["kind"], "dependency");
    assert_eq!(v["required"], "gen-data");
    let o = motslab(dir.path(), &["penrose", "--set", "seed=1"]);
    assert_eq!(last_json(&o)["required"], "horizon");
}

#[test]
fn regime_constraint_exits_three_with_failure_list() {
    let dir = tempfile::tempdir().unwrap();
    let o = motslab(dir.path(), &["gen-data", "--set", "seed=1", "--set", "regime.kappa=0.4"]);
    assert_eq!(o.status.code(), Some(3));
    let v = last_json(&o);
    assert_eq!(v["failures"][0]["name"], "kappa_lower");
}

#[test]
fn failed_data_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = motslab(dir.path(), &["gen-data", "--set", "seed=1", "--set", "profile.scale_critical_bound=1.0"]);
    assert_eq!(o.status.code(), Some(3));
    let v = last_json(&o);
    assert_eq!(v["status"], "constraint-failure");
    assert_eq!(v["failures"][0]["name"], "scale_critical_norm");
    // the artifacts are still written
    assert!(dir.path().join("constraints.json").is_file());
}

#[test]
fn unconverged_solver_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--set", "seed=1", "--set", "solver.newton_tol=1e-30", "--set", "solver.max_newton=4"];
    assert_eq!(motslab(dir.path(), &[&["gen-data"], &args[..]].concat()).status.code(), Some(0));
    let o = motslab(dir.path(), &[&["find-mots"], &args[..]].concat());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(last_json(&o)["kind"], "non-convergence");
}

#[test]
fn stale_upstream_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(motslab(dir.path(), &["gen-data", "--set", "seed=1"]).status.success());
    let o = motslab(dir.path(), &["evolve", "--set", "seed=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(last_json(&o)["reason"].as_str().unwrap().starts_with("stale"));
}

#[test]
fn full_run_honours_the_environment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\nout_dir = \"ignored\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_motslab"))
        .arg("all")
        .arg("--config")
        .arg(&cfg)
        .args(SMALL)
        .env("MOTSLAB_OUT_DIR", dir.path().join("env"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let out = dir.path().join("env");
    assert!(!dir.path().join("ignored").exists());
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let hash = summary["config_hash"].as_str().unwrap().to_string();
    assert_eq!(summary["passed"], true);
    for name in ["cone.csv", "trapped_map.csv", "sweep.csv", "mots/residual_000.csv", "plots/margin.gp", "plots/r_band.dat", "run_config.toml"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(text.starts_with(&format!("# config_hash: {hash}")), "{name}");
    }
    let svg = std::fs::read_to_string(out.join("plots/trapped_map.svg")).unwrap();
    assert!(svg.contains(&hash));
    for name in ["constraints.json", "evolve.json", "mots/bounds.json", "horizon.json", "penrose.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join(name)).unwrap()).unwrap();
        assert_eq!(v["config_hash"], hash.as_str(), "{name}");
    }
    // the stdout stream is one outcome per stage
    let lines: Vec<Value> = String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[5]["stage"], "report");
}

#[test]
fn config_subcommand_prints_resolved_toml() {
    let dir = tempfile::tempdir().unwrap();
    let o = motslab(dir.path(), &["config", "--set", "seed=3"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("# config_hash: "));
    assert!(text.contains("n_theta = 8"));
}
