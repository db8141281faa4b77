//! A hand-held session end to end: pickup, aiming, the jittery link, and
//! the threshold search over link-efficiency bins.
//!
//! cargo run --release --example handheld_session -- [config.toml] [seed]

use std::path::PathBuf;

use handheld_qkd::scenario::{distill_records, simulate, DistillOptions, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/handheld.toml"));
    let mut cfg = ScenarioConfig::load(&path).expect("config");
    if let Some(seed) = args.next().and_then(|a| a.parse().ok()) {
        cfg.seed = seed;
    }
    let out = simulate(&cfg).expect("simulation");
    let d = distill_records(&out.records, &out.pattern, &DistillOptions::new(out.metadata.clone()))
        .expect("distill");

    // one line per second: mean xi and raw rate
    let per_second = (1.0 / d.bins.bin_duration).round() as usize;
    let scale = 1.0 / (d.bins.bin_duration * out.metadata.time_scale * 1e3);
    println!("  t   xi     kbps");
    for (k, chunk) in d.bins.bins.chunks(per_second).enumerate() {
        let xi = chunk.iter().map(|b| b.xi_estimate).sum::<f64>() / chunk.len() as f64;
        let raw = chunk.iter().map(|b| b.raw_count).sum::<u64>() as f64 / chunk.len() as f64 * scale;
        println!("{k:3}  {xi:4.2}  {raw:7.1}  {}", "#".repeat((xi * 40.0) as usize));
    }
    println!(
        "link from bin {} ({:.2} s), xi_link {:.3}",
        d.link_start_bin,
        d.link_start_bin as f64 * d.bins.bin_duration,
        d.report.xi_link
    );

    if let Some(scan) = &d.scan {
        println!("\nxi_thr  R_sift kbps   QBER %  R_sec kbps");
        for p in scan.points.iter().step_by(10) {
            println!(
                "{:5.2}  {:11.2}  {:7.2}  {:10.2}",
                p.xi_thr,
                p.r_sift / 1e3,
                p.qber.unwrap_or(f64::NAN) * 100.0,
                p.r_sec / 1e3
            );
        }
    }
    let r = &d.report;
    println!(
        "\nbest xi_thr {:.2}: QBER {:.2} %, R_sec {:.1} kbps",
        r.xi_thr,
        r.qber * 100.0,
        r.r_sec_gllp / 1e3
    );
}
