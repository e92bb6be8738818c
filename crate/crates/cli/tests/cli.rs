use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn crowdobs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdobs"))
        .args(args)
        .env_remove("CROWDOBS_PARALLEL")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_CONFIG: &str = r#"{
  "n_agents": 12,
  "number_ratio": 0.25,
  "density": 0.3,
  "intrinsic_speed": 1.0,
  "n_samples": 120,
  "seed": 9,
  "window": 20
}"#;

const TINY_MANIFEST: &str = r#"{
  "grid": { "number_ratios": [0.25, 0.5], "speeds": [1.0], "densities": [0.3] },
  "runs_per_point": 3,
  "base_seed": 17,
  "params": { "n_agents": 12, "n_samples": 120 },
  "observer": { "window": 20 },
  "fit_stride": 1
}"#;

fn simulated(dir: &TempDir) -> std::path::PathBuf {
    let config = dir.path().join("c.json");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let out = dir.path().join("run");
    let o = crowdobs(&["simulate", "--config", path(&config), "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn simulate_writes_trajectory_dump_and_summary() {
    let dir = TempDir::new().unwrap();
    let out = simulated(&dir);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,agent_id,group,x,y,vx,vy\n"));
    assert_eq!(traj.lines().count(), 1 + 120 * 12);
    assert!(out.join("trajectory.json").exists());
    let dump = fs::read_to_string(out.join("classification.csv")).unwrap();
    assert!(dump.starts_with("window_start,agent_id,true_group,v_w,phi_bar_w,pred_agent_only,pred_neighborhood\n"));
    assert_eq!(dump.lines().count(), 1 + (120 - 20 + 1) * 12);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["mu"].as_f64().unwrap() > 0.0);

    let again = dir.path().join("again");
    let config = dir.path().join("c.json");
    crowdobs(&["simulate", "--config", path(&config), "--out", path(&again)]);
    assert_eq!(
        fs::read(out.join("trajectory.csv")).unwrap(),
        fs::read(again.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    for (name, body) in [
        ("typo.json", r#"{ "densty": 0.3 }"#),
        ("bad.json", r#"{ "density": -1.0 }"#),
        ("window.json", r#"{ "window": 0 }"#),
        ("syntax.json", "{ nope"),
    ] {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        let o = crowdobs(&["simulate", "--config", path(&p), "--out", path(&out)]);
        assert_eq!(code(&o), 1, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&crowdobs(&["simulate", "--config", path(&missing), "--out", path(&out)])), 1);
    assert_eq!(code(&crowdobs(&["simulate", "--bogus"])), 1);
    assert_eq!(code(&crowdobs(&["classify", "--trajectory", "t.csv", "--observer", "psychic", "--out", "x"])), 1);
    assert_eq!(code(&crowdobs(&["--help"])), 0);
}

#[test]
fn unreadable_trajectory_is_a_runtime_fault() {
    let dir = TempDir::new().unwrap();
    let t = dir.path().join("nothing.csv");
    let o = crowdobs(&["classify", "--trajectory", path(&t), "--observer", "agent", "--out", path(&dir.path().join("f.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nothing"));
}

#[test]
fn classify_with_each_observer() {
    let dir = TempDir::new().unwrap();
    let traj = simulated(&dir).join("trajectory.csv");
    let mut dumps = Vec::new();
    for obs in ["agent", "neighborhood", "fitted"] {
        let out = dir.path().join(format!("{obs}.csv"));
        let o = crowdobs(&["classify", "--trajectory", path(&traj), "--observer", obs, "--out", path(&out), "--window", "20"]);
        assert_eq!(code(&o), 0, "{obs}: {}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().count(), 1 + 101 * 12, "{obs}");
        dumps.push(text);
    }
    for line in dumps[0].lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[5], cols[6], "agent observer fills both columns alike");
    }
    // Same features regardless of observer.
    let feature_cols = |t: &str| t.lines().map(|l| l.split(',').take(5).collect::<Vec<_>>().join(",")).collect::<Vec<_>>();
    assert_eq!(feature_cols(&dumps[0]), feature_cols(&dumps[1]));
    assert_eq!(feature_cols(&dumps[0]), feature_cols(&dumps[2]));
    // The simulate dump uses the same analytic scale as the neighborhood observer.
    let sim_dump = fs::read_to_string(dir.path().join("run/classification.csv")).unwrap();
    assert_eq!(sim_dump, dumps[1]);
}

#[test]
fn sweep_is_reproducible_and_feeds_report() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("m.json");
    fs::write(&manifest, TINY_MANIFEST).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = Command::new(env!("CARGO_BIN_EXE_crowdobs"))
        .args(["sweep", "--manifest", path(&manifest), "--out", path(&a)])
        .env("CROWDOBS_PARALLEL", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = crowdobs(&["sweep", "--manifest", path(&manifest), "--out", path(&b), "--parallel", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("results.csv")).unwrap());
    assert!(csv.starts_with("rho,Nr,s0,run_seed,observer,group,n_m_mean,c_in_initial,c_in_final,drift_speed\n"));
    // 2 points x 3 runs x 3 observers x 2 groups
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 3 * 2);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("results.json")).unwrap()).unwrap();
    assert!(!sidecar["manifest"]["timestamp"].as_str().unwrap().is_empty());

    let more = crowdobs(&["sweep", "--manifest", path(&manifest), "--out", path(&a), "--runs", "4"]);
    assert_eq!(code(&more), 0);
    assert_eq!(fs::read_to_string(a.join("results.csv")).unwrap().lines().count(), 1 + 2 * 4 * 3 * 2);

    for figure in ["nm-vs-nr", "nm-vs-s0", "drift", "compare"] {
        let svg = dir.path().join(format!("{figure}.svg"));
        let o = crowdobs(&["report", "--results", path(&b.join("results.csv")), "--figure", figure, "--out", path(&svg)]);
        assert_eq!(code(&o), 0, "{figure}: {}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"), "{figure}");
    }
}

#[test]
fn sweep_rejects_bad_manifests() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("m.json");
    fs::write(&manifest, TINY_MANIFEST).unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&crowdobs(&["sweep", "--manifest", path(&manifest), "--out", path(&out), "--runs", "0"])), 1);
    assert_eq!(code(&crowdobs(&["sweep", "--manifest", path(&manifest), "--out", path(&out), "--parallel", "0"])), 1);
    let empty = dir.path().join("e.json");
    fs::write(&empty, r#"{ "grid": { "number_ratios": [], "speeds": [1.0], "densities": [0.3] } }"#).unwrap();
    assert_eq!(code(&crowdobs(&["sweep", "--manifest", path(&empty), "--out", path(&out)])), 1);
}
