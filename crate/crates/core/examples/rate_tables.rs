//! Recomputes the published rate tables and shows how the secret rate
//! depends on QBER and on the acceptance threshold.
//!
//! cargo run --example rate_tables

use handheld_qkd::distill::{gllp_secret_rate, tagged_fraction, GllpParams, SIFT_FACTOR, STATIC_RAW_RATE};
use handheld_qkd::scenario::{format_reproduction, reproduce, Table};

fn main() {
    for table in [Table::Static, Table::Handheld, Table::Decoy] {
        println!("{table:?}");
        print!("{}", format_reproduction(&reproduce(table).expect("table")));
        println!();
    }

    let params = GllpParams::default();
    println!("static link, secret rate against QBER");
    println!("QBER %   R_sec kbps");
    for e in [0.010, 0.015, 0.021, 0.030, 0.040, 0.050] {
        let inputs = params.inputs(STATIC_RAW_RATE * SIFT_FACTOR, e, params.t_bob);
        let r = gllp_secret_rate(&inputs).expect("rate");
        println!("{:6.1}   {:10.1}", e * 100.0, r.r_sec / 1e3);
    }

    println!("\ntagged fraction against link efficiency (mu = {})", params.mu);
    for xi in [1.0, 0.6, 0.4, 0.2, 0.1, 0.05] {
        match tagged_fraction(params.mu, xi * params.t_bob, params.eta) {
            Ok(d) => println!("  xi {xi:4.2}  Delta {d:.4}"),
            Err(e) => println!("  xi {xi:4.2}  {e}"),
        }
    }
}
