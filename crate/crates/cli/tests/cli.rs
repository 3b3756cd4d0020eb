use std::path::PathBuf;
use std::process::Command;

use strong_envelope::instance::{fixture_f1, fixture_one_step_binary};
use strong_envelope::{direct_recursion, Problem};
use strong_envelope_cli::commands::{convergence_rows, envelope_report, verify_report, TolArgs};
use strong_envelope_cli::config::{LatticeSpec, Payoff, TreeSpec};
use strong_envelope_cli::report::read_sweep_csv;
use strong_envelope_cli::{generate_random, instance_digest, load_config, parse_config, InstanceConfig, ObstacleRange, RunReport};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn senv(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_senv")).args(args).output().expect("binary runs")
}

fn f1() -> InstanceConfig {
    load_config(config_path("f1.json")).unwrap()
}

#[test]
fn f1_config_is_the_four_node_chain() {
    let inst = f1().resolve().unwrap();
    assert_eq!(inst.tree.len(), 4);
    assert_eq!(inst.tree.cemetery_level(), 3);
    let reference: Problem = fixture_f1();
    assert_eq!(instance_digest(&inst), instance_digest(&reference));
}

#[test]
fn generation_is_deterministic() {
    let range = ObstacleRange { low: -1.0, high: 1.0 };
    let a = generate_random(1, 3, 2, range).unwrap().resolve().unwrap();
    let b = generate_random(1, 3, 2, range).unwrap().resolve().unwrap();
    let c = generate_random(2, 3, 2, range).unwrap().resolve().unwrap();
    assert_eq!(instance_digest(&a), instance_digest(&b));
    assert_ne!(instance_digest(&a), instance_digest(&c));
    assert!(a.obstacle.values().iter().all(|x| (-1.0..=1.0).contains(x)));
    assert!((1..a.tree.len()).all(|n| a.tree.node(n).prob > 0.0));
}

#[test]
fn generation_respects_node_guard() {
    assert!(generate_random(0, 30, 3, ObstacleRange::default()).is_err());
}

#[test]
fn binomial_table_matches_one_step_fixture() {
    let config = InstanceConfig {
        tree: TreeSpec::Binomial(LatticeSpec {
            steps: 1,
            p: 0.5,
            initial: 1.0,
            up: 1.0,
            down: 1.0,
            payoff: Payoff::Table { values: vec![vec![0.0], vec![2.0, 0.0]] },
        }),
        grid: None,
        schedule: Default::default(),
    };
    let inst = config.resolve().unwrap();
    let reference: Problem = fixture_one_step_binary();
    assert_eq!(instance_digest(&inst), instance_digest(&reference));
    assert_eq!(direct_recursion(&inst)[0], 1.0);
}

#[test]
fn binomial_put_is_expanded_without_recombining() {
    let inst = load_config(config_path("american_put.json")).unwrap().resolve().unwrap();
    assert_eq!(inst.tree.len(), 127 + 64);
    // up-down and down-up reach the same spot along different nodes
    let (ud, du) = (inst.tree.children(inst.tree.children(0)[0])[1], inst.tree.children(inst.tree.children(0)[1])[0]);
    assert_ne!(ud, du);
    assert_eq!(inst.obstacle[ud], inst.obstacle[du]);
    let u = direct_recursion(&inst);
    assert!(u[0] >= 0.0 && u[0] <= 100.0);
}

#[test]
fn lattice_guard_rejects_deep_trees() {
    let text = r#"{"tree": {"kind": "binomial", "steps": 20, "p": 0.5, "payoff": {"type": "call", "strike": 1}}}"#;
    let err = parse_config(text, "inline").unwrap().resolve().unwrap_err();
    assert!(err.to_string().contains("guard"), "{err}");
}

#[test]
fn explicit_round_trip_keeps_digest() {
    for seed in 0..20 {
        let config = generate_random(seed, 4, 3, ObstacleRange { low: -2.0, high: 3.0 }).unwrap();
        let reloaded = parse_config(&config.to_json(), "round-trip").unwrap();
        assert_eq!(reloaded, config);
        assert_eq!(instance_digest(&reloaded.resolve().unwrap()), instance_digest(&config.resolve().unwrap()));
    }
}

#[test]
fn parse_errors_name_the_field_and_line() {
    let text = "{\n  \"tree\": {\"kind\": \"explicit\", \"nodes\": []},\n  \"grid\": {\"times\": [0, 1], \"weights\": \"one\"}\n}";
    let err = parse_config(text, "bad.json").unwrap_err().to_string();
    assert!(err.contains("grid.weights"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    let err = parse_config(r#"{"tree": {"kind": "explicit", "nodes": []}, "extra": 1}"#, "x").unwrap_err();
    assert!(err.to_string().contains("extra"), "{err}");
}

#[test]
fn envelope_on_f1() {
    let report = envelope_report(&f1(), &TolArgs::default()).unwrap();
    let env = report.envelope.as_ref().unwrap();
    let u: Vec<f64> = env.nodes.iter().map(|r| r.u).collect();
    let a: Vec<f64> = env.nodes.iter().map(|r| r.a).collect();
    assert_eq!(u, [3.0, 3.0, 2.0, 0.0]);
    assert_eq!(a, [0.0, 0.0, 1.0, 3.0]);
    assert!(env.nodes.iter().all(|r| r.m == 3.0));
    assert_eq!(env.row("0.0.0").unwrap().u, 2.0);

    let out = senv(&["envelope", "--config", config_path("f1.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.report_digest, report.report_digest);
}

#[test]
fn verify_on_f1_passes() {
    let report = verify_report(&f1(), 0, 5, 20, &TolArgs::default()).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    let out = senv(&["verify", "--config", config_path("f1.json").to_str().unwrap(), "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_fails_with_nonzero_exit_when_tolerance_is_impossible() {
    // tol_dom below the distance the last sweep can reach
    let out = senv(&["verify", "--config", config_path("f1.json").to_str().unwrap(), "--seeds", "1", "--tol-dom", "1e-12"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL") || stderr.contains("did not converge"), "{stderr}");
}

#[test]
fn convergence_on_f1() {
    let rows = convergence_rows(&f1(), 1e8).unwrap();
    assert_eq!(rows.len(), 9);
    assert_eq!((rows[0].beta, rows[0].sup_gap), (1.0, 1.0));
    assert!(rows.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = senv(&[
        "convergence",
        "--config",
        config_path("f1.json").to_str().unwrap(),
        "--beta-max",
        "1e8",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("beta,sup_gap,domination_violation\n"));
    assert_eq!(read_sweep_csv(&text).unwrap(), rows);
}

#[test]
fn oracle_subcommand_agrees() {
    let out = senv(&["oracle", "--max-nodes", "8", "--seeds", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.checks.len(), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(senv(&["bogus"]).status.code(), Some(2));
    assert_eq!(senv(&["envelope"]).status.code(), Some(2));
    assert_eq!(senv(&["envelope", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let bad_env = Command::new(env!("CARGO_BIN_EXE_senv"))
        .args(["envelope", "--config", config_path("f1.json").to_str().unwrap()])
        .env("SENV_TOL_GAP", "tiny")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn environment_sets_default_tolerances() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_senv"));
        cmd.args(["envelope", "--config", config_path("f1.json").to_str().unwrap()]);
        if let Some(v) = env {
            cmd.env("SENV_TOL_DOM", v);
        }
        if let Some(v) = flag {
            cmd.args(["--tol-dom", v]);
        }
        cmd.output().unwrap().status.code()
    };
    assert_eq!(run(None, None), Some(0));
    // too strict for the sweep to meet: non-convergence is a check failure
    assert_eq!(run(Some("1e-13"), None), Some(1));
    // the flag wins over the environment
    assert_eq!(run(Some("1e-13"), Some("1e-6")), Some(0));
}

#[test]
fn generate_subcommand_writes_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = senv(&["generate", "--seed", "1", "--depth", "3", "--branching", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let loaded = load_config(&path).unwrap();
    assert_eq!(loaded, generate_random(1, 3, 2, ObstacleRange::default()).unwrap());
}
