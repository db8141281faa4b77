//! Checks the vacuum + weak decoy bounds against photon-number ground truth
//! over randomly drawn links.
//!
//! cargo run --release --example decoy_bounds -- [runs] [seed]

use handheld_qkd::distill::{decoy_secret_rate, DecoyOptions};
use handheld_qkd::polarization::{rotate_about_s3, PreparedStateSet};
use handheld_qkd::receiver::ReceiverConfig;
use handheld_qkd::scenario::{simulate_decoy, DecoySimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2024);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    println!("   mu     nu     xi  misalign    y1_low   y1_true   e1_up  e1_true  kbps");
    let mut violations = 0;
    for run in 0..runs {
        let misalign: f64 = rng.random_range(0.2..0.6);
        let cfg = DecoySimConfig {
            mu: rng.random_range(0.3..0.8),
            nu: rng.random_range(0.1..0.25),
            xi: rng.random_range(0.3..1.0),
            states: PreparedStateSet::ideal().map("misaligned", |v| rotate_about_s3(v, misalign)),
            receiver: ReceiverConfig {
                dark_rate_per_detector: rng.random_range(100.0..5000.0),
                ..ReceiverConfig::default()
            },
            ..DecoySimConfig::default()
        };
        let truth = simulate_decoy(&cfg, seed + run as u64).expect("simulation");
        let r = decoy_secret_rate(&truth.inputs, &DecoyOptions::default()).expect("rate");
        let ok = r.y1_lower <= truth.y1_true && r.e1_upper >= truth.e1_true;
        violations += usize::from(!ok);
        println!(
            "{:5.3}  {:5.3}  {:5.3}  {:8.3}  {:8.5}  {:8.5}  {:6.4}  {:7.4}  {:5.1}{}",
            cfg.mu,
            cfg.nu,
            cfg.xi,
            misalign,
            r.y1_lower,
            truth.y1_true,
            r.e1_upper,
            truth.e1_true,
            r.rate / 1e3,
            if ok { "" } else { "  VIOLATED" }
        );
    }
    println!("{violations} of {runs} runs violate a bound");
}
