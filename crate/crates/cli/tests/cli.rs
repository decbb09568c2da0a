use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poiseuille"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["resolvent", "--config", "nope.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["psi"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_error_names_line_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "[physics]\nnu = [1e-3]\n\n[grid]\nm = 64\n");
    let out = bin(&["psi", "--config", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('m') && err.contains("line 5"), "{err}");
}

#[test]
fn resolvent_sample_config_writes_schema() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "[grid]\nn = 64\n[physics]\nnu = [1e-3]\nk = [1]\n");
    let out = bin(&["resolvent", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = tmp.path().join("o");
    let sweep = read(&o, "resolvent_1e-3_k1.csv");
    assert!(sweep.starts_with("coeff,k,lambda,norm\n"));
    assert_eq!(sweep.lines().count(), 202);
    assert!(!sweep.contains('\r'));
    let summary = read(&o, "resolvent_summary.csv");
    for key in ["sup_norm", "w_L2", "w_grad", "u_L2", "w_from_Hm1", "u_from_Hm1"] {
        assert!(summary.contains(&format!(",{key},")), "{key}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(&o, "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "resolvent");
    assert_eq!(manifest["config"]["physics"]["nu"][0], 1e-3);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_initial_data_gives_zero_ledger_and_bootstrap_rows() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[grid]\nn = 16\n[physics]\nnu = [1e-2]\nk_max = 3\nc0 = 0.0\nc1 = 0.0\nhorizon = 2.0\n[sweep]\nrecord_every = 5\n",
    );
    let out = bin(&["simulate", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = tmp.path().join("o");
    let ledger = read(&o, "ledger_nu1e-2_mu1e-2.csv");
    let mut lines = ledger.lines();
    assert_eq!(lines.next(), Some("t,k,E_component_name,value"));
    let body: Vec<&str> = lines.collect();
    assert!(body.len() > 9 * 4);
    assert!(body.iter().all(|l| l.ends_with(",0e0")));

    let out = bin(&["bootstrap", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let boot = read(&o, "bootstrap_nu1e-2_mu1e-2.csv");
    let rows: Vec<&str> = boot.lines().skip(1).collect();
    assert_eq!(rows.len(), 5 * 7);
    for k in -3..=3 {
        let names: Vec<&str> = rows
            .iter()
            .filter(|r| r.starts_with(&format!("{k},")))
            .map(|r| r.split(',').nth(1).unwrap())
            .collect();
        assert_eq!(
            names,
            ["vorticity_nonzero", "vorticity_mean", "temperature_mean", "temperature_low", "temperature_high"]
        );
    }
}

#[test]
fn bootstrap_without_simulation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", "[physics]\nnu = [1e-2]\n");
    let out = bin(&["bootstrap", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cfl_violation_exits_3_after_writing_partial_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[grid]\nn = 16\n[physics]\nnu = [1e-2]\nk_max = 4\ndt = 1.0\nhorizon = 4.0\n",
    );
    let out = bin(&["simulate", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CFL"));
    assert!(tmp.path().join("o/ledger_nu1e-2_mu1e-2.csv").exists());
    assert!(tmp.path().join("o/manifest.json").exists());
}

#[test]
fn degenerate_bracket_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[physics]\nnu = [1e-2]\n[bisection]\nbracket = [0.1, 0.1]\nsynthetic_gamma = 0.6666666666666666\n",
    );
    let out = bin(&["threshold", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stable") && err.contains("unstable"), "{err}");
}

#[test]
fn synthetic_threshold_reports_two_thirds() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[physics]\nnu = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]\n[bisection]\nbracket = [1e-6, 1.0]\ntolerance = 0.01\nsynthetic_gamma = 0.6666666666666666\n",
    );
    let out = bin(&["threshold", "--config", "c.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("o"), "manifest.json")).unwrap();
    let gamma = manifest["summary"]["gamma"].as_f64().unwrap();
    assert!((gamma - 2.0 / 3.0).abs() < 0.02, "gamma = {gamma}");
    assert_eq!(read(&tmp.path().join("o"), "threshold.csv").lines().count(), 6);
}

#[test]
fn identical_config_and_seed_give_identical_csv_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[grid]\nn = 16\n[physics]\nnu = [1e-2, 5e-3]\nk_max = 4\nhorizon = 5.0\n[sweep]\nrecord_every = 10\n",
    );
    let a = bin(&["simulate", "--config", "c.toml", "--out", "a", "--seed", "7", "--jobs", "1"], tmp.path());
    let b = bin(&["simulate", "--config", "c.toml", "--out", "b", "--seed", "7", "--jobs", "3"], tmp.path());
    let c = bin(&["simulate", "--config", "c.toml", "--out", "c", "--seed", "8"], tmp.path());
    assert!(a.status.success() && b.status.success() && c.status.success());
    let mut names: Vec<_> = std::fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in &names {
        assert_eq!(read(&tmp.path().join("a"), n), read(&tmp.path().join("b"), n), "{n}");
    }
    assert_ne!(
        read(&tmp.path().join("a"), "ledger_nu1e-2_mu1e-2.csv"),
        read(&tmp.path().join("c"), "ledger_nu1e-2_mu1e-2.csv")
    );
    let m: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("a"), "manifest.json")).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["sim_configs"].as_array().unwrap().len(), 2);
}

#[test]
fn real_threshold_is_finite_and_reproducible_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[grid]\nn = 48\n[physics]\nnu = [1e-2]\nk_max = 8\n[bisection]\nbracket = [1e-2, 1e4]\ntolerance = 0.05\n",
    );
    for seed in ["1", "2"] {
        let runs: Vec<String> = ["x", "y"]
            .iter()
            .map(|d| {
                let dir = format!("{d}{seed}");
                let out = bin(&["threshold", "--config", "c.toml", "--out", &dir, "--seed", seed], tmp.path());
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                read(&tmp.path().join(&dir), "threshold.csv")
            })
            .collect();
        assert_eq!(runs[0], runs[1]);
        let row: Vec<f64> = runs[0].lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!(row[2].is_finite() && row[2] > 1e-2 && row[2] < 1e4);
        assert!(row[3] <= 0.05);
    }
}
