use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn phasepos(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasepos"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every JSON artifact listed in the manifest carries the run's hash.
fn assert_hash_everywhere(dir: &Path) -> String {
    let manifest = json(&dir.join("manifest.json"));
    let hash = manifest["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["path"].as_str().unwrap();
        assert!(dir.join(name).exists(), "{name} listed but missing");
        if name.ends_with(".json") {
            assert_eq!(
                json(&dir.join(name))["config_hash"],
                hash.as_str(),
                "{name}"
            );
        } else {
            let side = dir.join(name).with_extension("json");
            assert!(side.exists(), "{name} has no sidecar");
        }
    }
    hash
}

#[test]
fn decoherence_times_prints_both_thresholds() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(&["decoherence-times", "--m", "1", "--d", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("1.316074"), "{s}");
    assert!(s.contains("1.969500"), "{s}");
    assert!(s.contains("robust"), "{s}");
    let times = json(&dir.path().join("times.json"));
    let t_p = times["family"]["p_positivity_time"].as_f64().unwrap();
    assert!((1.96..=1.98).contains(&t_p));
    assert_eq!(times["family"]["diffusion"]["admissible"], true);
    assert_hash_everywhere(dir.path());
}

#[test]
fn coherent_family_solves_real_alpha_cubic() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(&["decoherence-times", "--family", "coherent"], dir.path());
    assert!(o.status.success());
    let t = json(&dir.path().join("times.json"))["family"]["p_positivity_time"]
        .as_f64()
        .unwrap();
    // t^3 - 2 t^2 - 6 = 0 for alpha = 2 at m = D = 1
    assert!((t * t * t - 2.0 * t * t - 6.0).abs() < 1e-8, "{t}");
}

#[test]
fn certify_w_desk_cat() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(
        &["certify-w", "--state", "cat", "--sep", "6", "--grid", "512"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["bound_respected"], true);
    assert_eq!(report["probes"].as_array().unwrap().len(), 64);
    let last_negative = report["last_negative"].as_f64().unwrap();
    assert!(last_negative < 1.316074, "{last_negative}");
    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("t,min_value,negative_volume,status\n"));
    assert_eq!(curve.lines().count(), 65);
    assert_hash_everywhere(dir.path());
}

#[test]
fn certify_p_marks_early_probes_unavailable() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(
        &[
            "certify-p",
            "--state",
            "cat",
            "--probes",
            "1.0",
            "2.0",
            "2.5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let rows: Vec<&str> = curve.lines().skip(1).collect();
    assert_eq!(rows[0], "1.0,,,unavailable");
    assert!(
        rows[1].ends_with(",certified") && rows[2].ends_with(",certified"),
        "{curve}"
    );
}

#[test]
fn oracle_compare_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(
        &["oracle-compare", "--state", "cat", "--t", "1.0"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("L1 distance"));
    let body = json(&dir.path().join("oracle.json"));
    assert!(body["l1_distance"].as_f64().unwrap() <= 1e-3);

    // too coarse in momentum for the centred diffusion stencil
    let coarse = TempDir::new().unwrap();
    let o = phasepos(
        &[
            "oracle-compare",
            "--state",
            "cat",
            "--t",
            "1.0",
            "--grid",
            "128",
            "--p-half",
            "10",
            "--x-half",
            "12",
        ],
        coarse.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert_eq!(json(&coarse.path().join("oracle.json"))["pass"], false);
    assert_hash_everywhere(coarse.path());
}

#[test]
fn unstable_step_is_a_contract_violation() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(
        &[
            "oracle-compare",
            "--state",
            "vacuum",
            "--t",
            "1",
            "--grid",
            "128",
            "--x-half",
            "12",
            "--p-half",
            "8",
            "--dt",
            "0.02",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("unstable"), "{}", stderr(&o));
}

#[test]
fn missing_keys_are_listed() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(&["evolve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("missing config keys: state, t"),
        "{}",
        stderr(&o)
    );
    let o = phasepos(&["sweep", "--m-list", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d_list"));
    let o = phasepos(&["evolve", "--state", "fock", "--t", "1"], dir.path());
    assert!(stderr(&o).contains("missing config keys: n"));
}

#[test]
fn invalid_values_exit_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["decoherence-times", "--m=-1"][..],
        &["decoherence-times", "--family", "wide"],
        &["certify-w", "--state", "vacuum", "--grid", "100"],
    ] {
        let o = phasepos(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_merges_with_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"state": "vacuum", "t": 2.5, "grid": 128, "x_half": 12, "p_half": 8}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = phasepos(
        &["evolve", "--config", cfg.to_str().unwrap(), "--t", "0.5"],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["t"], 0.5);
    assert_eq!(manifest["config"]["grid"], 128);
    assert_eq!(manifest["config"]["family"], "robust");

    fs::write(&cfg, r#"{"state": "vacuum", "mass": 2}"#).unwrap();
    let o = phasepos(&["evolve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass"));
}

#[test]
fn evolve_is_byte_deterministic() {
    let args = [
        "evolve", "--state", "cat", "--sep", "4", "--t", "0.5", "--grid", "128", "--x-half", "12",
        "--p-half", "8",
    ];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(phasepos(&args, a.path()).status.success());
    assert!(phasepos(&args, b.path()).status.success());
    let ha = assert_hash_everywhere(a.path());
    assert_eq!(ha, assert_hash_everywhere(b.path()));
    for name in ["wigner.csv", "q.csv", "p.csv", "trace.csv", "summary.json"] {
        let fa = fs::read(a.path().join(name)).unwrap();
        assert_eq!(fa, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    // below the factorization time P comes from deconvolution
    let p = json(&a.path().join("p.json"));
    assert_eq!(p["reliable"], false);
    assert_eq!(p["kind"], "p");
    let summary = json(&a.path().join("summary.json"));
    assert_eq!(summary["p_route"], "deconvolution");
    assert!(
        summary["wigner"]["negativity"]["min_value"]
            .as_f64()
            .unwrap()
            < 0.0
    );
}

#[test]
fn evolve_forward_route_after_threshold() {
    let dir = TempDir::new().unwrap();
    let o = phasepos(
        &["evolve", "--state", "fock", "--n", "1", "--t", "2.5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["p_route"], "forward");
    assert_eq!(summary["p"]["reliable"], true);
    assert_eq!(summary["p"]["negativity"]["certified_positive"], true);
    let norm = summary["p"]["moments"]["norm"].as_f64().unwrap();
    assert!((norm - 1.0).abs() < 1e-8);
    let wig = fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    assert!(wig.starts_with("x,p,value\n"));
    assert_eq!(wig.lines().count(), 512 * 512 + 1);
}

#[test]
fn sweep_rows_follow_index_order_for_any_pool_size() {
    let args = [
        "sweep",
        "--m-list",
        "1",
        "2",
        "--d-list",
        "1",
        "4",
        "--family-list",
        "robust",
        "coherent",
        "1,0.5",
    ];
    let run = |threads: Option<&str>| {
        let dir = TempDir::new().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_phasepos"));
        cmd.args(args).arg("--out").arg(dir.path());
        if let Some(t) = threads {
            cmd.env("PHASEPOS_THREADS", t);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert_hash_everywhere(dir.path());
        fs::read_to_string(dir.path().join("sweep.csv")).unwrap()
    };
    let one = run(Some("1"));
    assert_eq!(one, run(None));
    let rows: Vec<&str> = one.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    for (i, r) in rows.iter().enumerate() {
        assert!(r.starts_with(&format!("{i},")), "{r}");
    }
    // first point is m = D = 1 with the robust family
    let first: Vec<&str> = rows[0].split(',').collect();
    let t_p: f64 = first[7].parse().unwrap();
    assert!((t_p - 1.9695).abs() < 1e-4);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_phasepos"))
        .args(["decoherence-times", "--out"])
        .arg(dir.path())
        .env("PHASEPOS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
