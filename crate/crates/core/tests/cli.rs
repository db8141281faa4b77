use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hhqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hhqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn simulate(cfg: &Path, seed: &str, out: &Path) {
    let o = hhqkd(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn distill_args(run: &Path, pattern: &Path, out: &Path) -> Vec<String> {
    vec![
        "distill".into(),
        "--records".into(),
        run.join("records.bin").to_str().unwrap().into(),
        "--pattern".into(),
        pattern.to_str().unwrap().into(),
        "--out".into(),
        out.to_str().unwrap().into(),
    ]
}

fn distill(run: &Path, pattern: &Path, extra: &[&str], out: &Path) -> Value {
    let mut args = distill_args(run, pattern, out);
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = hhqkd(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn static_run_matches_published_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    simulate(&config("static.toml"), "1", &run);
    let out = tmp.path().join("d");
    let report = distill(&run, &run.join("pattern.bin"), &["--optimize"], &out);
    let r_raw = report["r_raw"].as_f64().unwrap();
    let qber = report["qber"].as_f64().unwrap();
    let r_sec = report["r_sec_gllp"].as_f64().unwrap();
    assert!((r_raw - 649_500.0).abs() < 0.05 * 649_500.0, "{r_raw}");
    assert!((qber - 0.021).abs() < 0.002, "{qber}");
    assert!((r_sec - 103_200.0).abs() < 0.05 * 103_200.0, "{r_sec}");
    assert!(report["r_sec_decoy"].is_null());
    let bins = std::fs::read_to_string(out.join("bins.csv")).unwrap();
    assert!(bins.starts_with("bin_index,r_raw,xi,qber\n"));
    assert!(out.join("threshold_scan.csv").is_file());
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.toml",
        "duration = 0.01\n[channel]\nmode = \"handheld\"\n",
    );
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    simulate(&cfg, "5", &a);
    simulate(&cfg, "5", &b);
    simulate(&cfg, "6", &c);
    for f in ["records.bin", "pattern.bin", "trace.csv", "ground_truth.csv", "metadata.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    assert_ne!(
        std::fs::read(a.join("records.bin")).unwrap(),
        std::fs::read(c.join("records.bin")).unwrap()
    );
}

#[test]
fn zero_duration_succeeds_with_empty_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", "duration = 0.0\n");
    let run = tmp.path().join("run");
    simulate(&cfg, "1", &run);
    assert_eq!(std::fs::metadata(run.join("records.bin")).unwrap().len(), 0);
    let truth = std::fs::read_to_string(run.join("ground_truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1);
}

#[test]
fn foreign_pattern_gives_no_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", "duration = 0.02\n");
    let (own, other) = (tmp.path().join("own"), tmp.path().join("other"));
    simulate(&cfg, "1", &own);
    simulate(&cfg, "2", &other);
    let report = distill(&own, &other.join("pattern.bin"), &["--optimize"], &tmp.path().join("d"));
    let qber = report["qber"].as_f64().unwrap();
    assert!((qber - 0.5).abs() < 0.03, "{qber}");
    assert_eq!(report["r_sec_gllp"].as_f64().unwrap(), 0.0);
}

#[test]
fn handheld_run_picks_a_mid_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    simulate(&config("handheld.toml"), "1", &run);
    let gains = write_config(
        tmp.path(),
        "gains.json",
        r#"{"mu": 0.153, "nu": 0.077, "q_mu": 0.00502, "q_nu": 0.00253,
            "e_mu": 0.016, "e_nu": 0.0163, "y0": 2e-6, "signal_fraction": 0.97}"#,
    );
    let report = distill(
        &run,
        &run.join("pattern.bin"),
        &["--decoy", gains.to_str().unwrap()],
        &tmp.path().join("d"),
    );
    let xi_thr = report["xi_thr"].as_f64().unwrap();
    let xi_link = report["xi_link"].as_f64().unwrap();
    assert!((0.40..=0.65).contains(&xi_thr), "{xi_thr}");
    assert!(xi_link > 0.1 && xi_link < 0.4, "{xi_link}");
    assert!(report["r_sec_gllp"].as_f64().unwrap() > 0.0);
    assert!(report["r_sec_decoy"].as_f64().unwrap() > 0.0);

    // a fixed threshold is used as given
    let fixed = distill(&run, &run.join("pattern.bin"), &["--xi-thr", "0.3"], &tmp.path().join("f"));
    assert_eq!(fixed["xi_thr"].as_f64().unwrap(), 0.3);
}

#[test]
fn reproduce_prints_every_row() {
    let start = std::time::Instant::now();
    let o = hhqkd(&["reproduce", "--table", "handheld"]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("average"));
    for table in ["static", "decoy"] {
        assert!(hhqkd(&["reproduce", "--table", table]).status.success());
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let bad_key = write_config(tmp.path(), "a.toml", "[receiver]\ndetector_eff = 0.4\n");
    let o = hhqkd(&["simulate", "--config", bad_key.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("detector_eff"));

    let bad_range = write_config(tmp.path(), "b.toml", "[source]\nmu = -1.0\n");
    let o = hhqkd(&["simulate", "--config", bad_range.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("source"));

    let o = hhqkd(&["simulate", "--config", "/no/such/file.toml", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(hhqkd(&["reproduce", "--table", "bogus"]).status.code(), Some(2));
    assert_eq!(hhqkd(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();

    let cfg = write_config(tmp.path(), "run.toml", "duration = 0.001\n");
    let run = tmp.path().join("run");
    simulate(&cfg, "1", &run);
    let records = run.join("records.bin");
    let bytes = std::fs::read(&records).unwrap();
    std::fs::write(&records, &bytes[..bytes.len() - 3]).unwrap();
    let args = distill_args(&run, &run.join("pattern.bin"), &tmp.path().join("d"));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(hhqkd(&args).status.code(), Some(3));

    let empty_cfg = write_config(tmp.path(), "empty.toml", "duration = 0.0\n");
    let empty = tmp.path().join("empty");
    simulate(&empty_cfg, "1", &empty);
    let args = distill_args(&empty, &empty.join("pattern.bin"), &tmp.path().join("d2"));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(hhqkd(&args).status.code(), Some(3));
}
