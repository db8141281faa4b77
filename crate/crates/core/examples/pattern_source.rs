//! Builds a pseudo-random pattern and draws emissions from it: symbol
//! balance, the photon-number distribution and background photons.
//!
//! cargo run --release --example pattern_source -- [seed]

use handheld_qkd::polarization::{BbState, PreparedStateSet};
use handheld_qkd::source::{
    block_rng, build_pattern, Emitter, SourceConfig, DEFAULT_PATTERN_LENGTH, DEFAULT_REP_RATE,
};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let pattern = build_pattern(seed, DEFAULT_PATTERN_LENGTH).expect("pattern");
    println!(
        "{} symbols, repeats every {:.3} ms at {} MHz",
        pattern.len(),
        pattern.period(DEFAULT_REP_RATE) * 1e3,
        DEFAULT_REP_RATE / 1e6
    );
    let mut counts = [0usize; 4];
    for s in pattern.symbols() {
        counts[s.state().index()] += 1;
    }
    for state in [BbState::H, BbState::V, BbState::P45, BbState::M45] {
        println!("  {:<4} {:.4}", state.name(), counts[state.index()] as f64 / pattern.len() as f64);
    }

    let cfg = SourceConfig {
        states: PreparedStateSet::sender_output(),
        background_rate: 2e5,
        ..SourceConfig::default()
    };
    let emitter = Emitter::new(&pattern, &cfg).expect("source config");
    let mut rng = block_rng(seed, 0);
    let slots = 1_000_000u64;
    let mut histogram = [0u64; 4];
    let mut background = 0u64;
    for slot in 0..slots {
        let e = emitter.emit(slot, &mut rng);
        histogram[(e.signal.photon_count as usize).min(3)] += 1;
        background += e.background.map_or(0, |b| u64::from(b.photon_count));
    }
    println!("\nmu = {}: photon-number frequencies over {slots} slots", cfg.mu);
    for (n, c) in histogram.iter().enumerate() {
        let label = if n == 3 { "3+".to_owned() } else { n.to_string() };
        println!("  n = {label:<2} {:.6}", *c as f64 / slots as f64);
    }
    println!(
        "background photons per slot {:.2e} (expected {:.2e})",
        background as f64 / slots as f64,
        cfg.background_per_slot()
    );
}
