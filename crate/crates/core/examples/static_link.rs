//! Mounted-sender run: calibrates background and noise to the target QBER,
//! simulates the link and distills the key.
//!
//! cargo run --release --example static_link -- [config.toml] [seed]

use std::path::PathBuf;

use handheld_qkd::scenario::{
    calibrate_static, distill_records, simulate, DistillOptions, ScenarioConfig,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/static.toml"));
    let mut cfg = ScenarioConfig::load(&path).expect("config");
    if let Some(seed) = args.next().and_then(|a| a.parse().ok()) {
        cfg.seed = seed;
    }

    if let Some(cal) = &cfg.calibration {
        let c = calibrate_static(
            &cfg.states().expect("states"),
            cfg.source.mu,
            cfg.source.rep_rate,
            &cfg.receiver,
            cal.target_qber,
            cal.noise_error_share,
        )
        .expect("calibration");
        println!(
            "calibrated for QBER {}: background {:.0} photons/s, dark {:.0} /s per detector",
            cal.target_qber, c.background_rate, c.dark_rate_per_detector
        );
    }

    let out = simulate(&cfg).expect("simulation");
    println!("{} slots, {} detections", out.metadata.slots, out.records.len());
    let d = distill_records(&out.records, &out.pattern, &DistillOptions::new(out.metadata.clone()))
        .expect("distill");
    let r = &d.report;
    println!("R_raw  {:8.1} kbps", r.r_raw / 1e3);
    println!("R_sift {:8.1} kbps", r.r_sift / 1e3);
    println!("QBER   {:8.3} %", r.qber * 100.0);
    println!("Delta  {:>8}", r.delta.map_or("-".into(), |d| format!("{d:.4}")));
    println!("xi_thr {:8.2}", r.xi_thr);
    println!("R_sec  {:8.1} kbps", r.r_sec_gllp / 1e3);
}
