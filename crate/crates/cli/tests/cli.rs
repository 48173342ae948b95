use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn epiplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiplan"))
        .args(args)
        .env_remove("EPIPLAN_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn train_small(out: &Path, env: &str, algo: &str, seeds: &str, steps: &str) -> Output {
    epiplan(&[
        "train",
        "--env",
        env,
        "--algo",
        algo,
        "--seeds",
        seeds,
        "--timesteps",
        steps,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn unknown_env_lists_valid_names() {
    let o = epiplan(&["train", "--env", "bogus", "--algo", "ppo"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for name in ["SIR-A", "SIR-B", "SIRV-A", "SIRV-B", "C15-A", "C15-B"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn invalid_flags_are_usage_errors() {
    assert_eq!(epiplan(&["train", "--env", "SIR-A", "--algo", "dqn"]).status.code(), Some(2));
    assert_eq!(
        epiplan(&["train", "--env", "SIR-A", "--algo", "ppo", "--timesteps", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        epiplan(&["baseline", "--env", "SIR-A", "--policy", "cautious"]).status.code(),
        Some(2)
    );
    assert_eq!(
        epiplan(&["export-schedule", "--checkpoint", "x", "--env", "SIR-A", "--mode", "best"]).status.code(),
        Some(2)
    );
}

#[test]
fn list_envs_prints_all_six() {
    let o = epiplan(&["list-envs"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn train_writes_complete_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = train_small(out, "SIR-A", "ppo", "0,1", "4096");
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let run = a.join("SIR-A-ppo");
    for seed in ["seed-0", "seed-1"] {
        let ca = fs::read(run.join(seed).join("curve.csv")).unwrap();
        let cb = fs::read(b.join("SIR-A-ppo").join(seed).join("curve.csv")).unwrap();
        assert_eq!(ca, cb);
    }

    let m = read_json(&run.join("manifest.json"));
    assert_eq!(m["env"], "SIR-A");
    assert_eq!(m["label"], "PPO");
    assert_eq!(m["completed"], true);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["ppo"]["total_timesteps"], 4096);
    assert!(m["seed_rule"].as_str().unwrap().contains("stream"));
    let listed: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut on_disk = Vec::new();
    for entry in walk(&run) {
        on_disk.push(entry.strip_prefix(&run).unwrap().to_string_lossy().replace('\\', "/"));
    }
    let mut sorted = listed.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    sorted.sort();
    on_disk.sort();
    assert_eq!(sorted, on_disk);
    assert!(listed.contains(&"seed-0/best_schedule.json"));
    assert!(listed.contains(&"seed-1/checkpoint.json"));

    for f in &on_disk {
        let p = run.join(f);
        if f.ends_with(".json") {
            read_json(&p);
        } else if f.ends_with(".csv") {
            read_csv(&p);
        }
    }

    let (header, rows) = read_csv(&run.join("seed-0/curve.csv"));
    assert_eq!(header[..3], ["episode", "timestep", "episode_return"]);
    assert_eq!(rows.len(), 4096 / 52);
    let best: f64 = m["results"][0]["value"].as_f64().unwrap();
    let max_curve = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(best, max_curve);

    let sched = read_json(&run.join("seed-0/best_schedule.json"));
    assert_eq!(sched["weeks"].as_array().unwrap().len(), 52);
    assert_eq!(sched["cumulative_reward"].as_f64().unwrap(), best);

    let again = train_small(&a, "SIR-A", "ppo", "0,1", "4096");
    assert!(!again.status.success());
    assert!(stderr(&again).contains("refusing to overwrite"));
    assert_eq!(fs::read(run.join("seed-0/curve.csv")).unwrap(), fs::read(b.join("SIR-A-ppo/seed-0/curve.csv")).unwrap());
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn sac_train_and_sampled_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = train_small(dir.path(), "SIRV-B", "sac", "3", "1300");
    assert!(o.status.success(), "{}", stderr(&o));
    let ckpt = dir.path().join("SIRV-B-sac/seed-3/checkpoint.json");
    let out = dir.path().join("export");
    let o = epiplan(&[
        "export-schedule",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--env",
        "SIRV-B",
        "--mode",
        "sampled",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("schedule-SIRV-B-sampled.csv"));
    assert_eq!(header, ["day", "m", "v", "s", "w"]);
    assert_eq!(rows.len(), 52);
    for r in &rows {
        for v in &r[1..] {
            let v: f64 = v.parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn export_is_repeatable_and_checks_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = train_small(dir.path(), "SIRV-B", "ppo", "0", "2048");
    assert!(o.status.success(), "{}", stderr(&o));
    let ckpt = dir.path().join("SIRV-B-ppo/seed-0/checkpoint.json");
    let ckpt = ckpt.to_str().unwrap();
    let mut outputs = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        let o = epiplan(&[
            "export-schedule",
            "--checkpoint",
            ckpt,
            "--env",
            "SIRV-B",
            "--mode",
            "greedy",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(out.join("schedule-SIRV-B-greedy.csv")).unwrap());
        let doc = read_json(&out.join("schedule-SIRV-B-greedy.json"));
        assert_eq!(doc["columns"].as_array().unwrap().len(), 4);
    }
    assert_eq!(outputs[0], outputs[1]);
    let (_, rows) = read_csv(&dir.path().join("x/schedule-SIRV-B-greedy.csv"));
    assert_eq!(rows.len(), 52);
    assert!(rows.iter().flat_map(|r| r[1..].to_vec()).all(|v| (0.0..=1.0).contains(&v.parse::<f64>().unwrap())));

    let again = epiplan(&[
        "export-schedule",
        "--checkpoint",
        ckpt,
        "--env",
        "SIRV-B",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert!(!again.status.success());

    let o = epiplan(&["export-schedule", "--checkpoint", ckpt, "--env", "SIR-A"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("observation dim 3") && err.contains("observation dim 5"), "{err}");
    assert!(err.contains("action dim 2") && err.contains("action dim 4"), "{err}");
}

fn baseline(dir: &Path, env: &str, policy: &str) -> Value {
    let o = epiplan(&[
        "baseline",
        "--env",
        env,
        "--policy",
        policy,
        "--seeds",
        "0,1,2,3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    read_json(&dir.join(format!("{env}-{}", policy.to_ascii_lowercase())).join("summary.json"))
}

#[test]
fn baseline_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let lax = baseline(dir.path(), "SIR-A", "lax");
    assert_eq!(lax["std"].as_f64().unwrap(), 0.0);
    let values = lax["values"].as_array().unwrap();
    assert!(values.iter().all(|v| v == &values[0]));

    let random = baseline(dir.path(), "SIR-A", "random");
    let mut v: Vec<f64> = random["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(random["max"].as_f64().unwrap() >= random["mean"].as_f64().unwrap());
    v.sort_by(f64::total_cmp);
    v.dedup();
    assert_eq!(v.len(), 4);

    let aggressive_b = baseline(dir.path(), "SIR-B", "aggressive");
    let lax_b = baseline(dir.path(), "SIR-B", "lax");
    assert!(aggressive_b["max"].as_f64().unwrap() < lax_b["max"].as_f64().unwrap());

    let o = epiplan(&["baseline", "--env", "SIR-A", "--policy", "lax", "--seeds", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("-92."), "{}", stdout(&o));
}

#[test]
fn compare_tabulates_in_millions() {
    let dir = tempfile::tempdir().unwrap();
    baseline(dir.path(), "SIR-A", "lax");
    baseline(dir.path(), "SIR-A", "aggressive");
    let csv_path = dir.path().join("table.csv");
    let o = epiplan(&["compare", "--dir", dir.path().to_str().unwrap(), "--csv", csv_path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no Lax results for SIR-B"));
    let (header, rows) = read_csv(&csv_path);
    assert_eq!(header.len(), 8);
    assert!(header[2..].iter().all(|h| h.ends_with("(M$)")));
    assert_eq!(rows[0][0], "Aggressive");
    let lax_max: f64 = rows.iter().find(|r| r[0] == "Lax" && r[1] == "max").unwrap()[2].parse().unwrap();
    let summary = read_json(&dir.path().join("SIR-A-lax/summary.json"));
    assert!((lax_max - summary["max"].as_f64().unwrap() / 1e6).abs() < 1e-9);
    assert!(rows.iter().all(|r| r[3].is_empty()));
}

#[test]
fn compare_empty_dir_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = epiplan(&["compare", "--dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).contains("M$"));
}

#[test]
fn config_from_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"run": {"seeds": [5]}, "ppo": {"total_timesteps": 2048}}"#).unwrap();
    let out = dir.path().join("runs");
    let o = Command::new(env!("CARGO_BIN_EXE_epiplan"))
        .args(["train", "--env", "SIR-B", "--algo", "ppo", "--out", out.to_str().unwrap()])
        .env("EPIPLAN_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let m = read_json(&out.join("SIR-B-ppo/manifest.json"));
    assert_eq!(m["seeds"], serde_json::json!([5]));
    assert!(out.join("SIR-B-ppo/seed-5/curve.csv").exists());

    fs::write(&cfg, r#"{"modle": {}}"#).unwrap();
    let o = epiplan(&["baseline", "--env", "SIR-A", "--policy", "lax", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn divergence_leaves_error_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"model": {"beta": 1e9}}"#).unwrap();
    let out = dir.path().join("runs");
    let o = epiplan(&[
        "train",
        "--env",
        "SIR-A",
        "--algo",
        "ppo",
        "--seeds",
        "0",
        "--timesteps",
        "2048",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = read_json(&out.join("SIR-A-ppo/seed-0/error.json"));
    assert!(err["error"].as_str().unwrap().contains("integration"));
    let m = read_json(&out.join("SIR-A-ppo/manifest.json"));
    assert_eq!(m["results"][0]["status"], "failed");
    assert_eq!(m["completed"], false);
}

#[test]
fn wall_clock_budget_gives_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let o = epiplan(&[
        "train",
        "--env",
        "SIR-A",
        "--algo",
        "sac",
        "--seeds",
        "0,1",
        "--jobs",
        "1",
        "--max-hours",
        "1e-7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = read_json(&out.join("SIR-A-sac/manifest.json"));
    assert_eq!(m["completed"], false);
    let statuses: Vec<&str> = m["results"].as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert!(statuses.iter().all(|s| *s == "partial" || *s == "skipped"), "{statuses:?}");
}
