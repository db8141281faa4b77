//! Generates a hand-held link trace, summarizes it and writes it as CSV
//! together with the attitude-sensor reports derived from it.
//!
//! cargo run --release --example link_trace -- [duration_s] [seed] [out.csv]

use handheld_qkd::channel::{sensor_stream_from_trace, simulate_link_trace, JitterModel};

fn main() {
    let mut args = std::env::args().skip(1);
    let duration: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(40.0);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let out = args.next();

    let model = JitterModel::default();
    let trace = simulate_link_trace(&model, duration, seed).expect("trace");
    let start = trace
        .xi
        .iter()
        .enumerate()
        .position(|(k, &x)| k as f64 * trace.bin_duration >= model.pickup_time && x > 0.0)
        .unwrap_or(0);
    println!(
        "{} bins of {} ms, picked up at {:.1} s, link from {:.2} s",
        trace.len(),
        trace.bin_duration * 1e3,
        model.pickup_time,
        start as f64 * trace.bin_duration
    );
    println!("mean xi over the link {:.3}", trace.mean_xi_from(start));

    let mut hist = [0usize; 10];
    for &x in &trace.xi[start..] {
        hist[((x * 10.0) as usize).min(9)] += 1;
    }
    let n = (trace.len() - start).max(1) as f64;
    for (k, c) in hist.iter().enumerate() {
        let share = *c as f64 / n;
        println!("  xi {:.1}-{:.1} {:5.3} {}", k as f64 / 10.0, (k + 1) as f64 / 10.0, share, "#".repeat((share * 60.0) as usize));
    }

    let sensor = sensor_stream_from_trace(&trace);
    let last = trace.theta_deg.last().copied().unwrap_or(0.0);
    println!("{} sensor reports, final roll {last:.1} deg", sensor.updates.len());

    if let Some(path) = out {
        trace.save(&path).expect("write trace");
        println!("wrote {path}");
    }
}
