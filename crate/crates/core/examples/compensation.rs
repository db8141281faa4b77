//! Finds waveplate angles that undo the unitary part of the path between
//! sender and detectors, then shows what a sender roll does to the
//! compensated states with and without the frame correction.
//!
//! cargo run --release --example compensation

use handheld_qkd::polarization::{
    apply_stack, intrinsic_qber, optimize_compensation, rotate_about_s3, PreparedStateSet,
};
use handheld_qkd::receiver::frame_correction_stack;

fn main() {
    let measured = PreparedStateSet::receiver_uncompensated();
    println!("uncompensated intrinsic QBER {:.4}", intrinsic_qber(&measured));

    let comp = optimize_compensation(&measured).expect("measured states are usable");
    for (name, plate) in ["QWP", "QWP", "HWP"].iter().zip(&comp.stack) {
        println!("  {name} at {:7.2} deg", plate.axis_angle().to_degrees());
    }
    println!("residual QBER {:.5}", comp.residual_qber);

    let compensated = comp.apply_set(&measured);
    println!("\nroll   no correction   corrected");
    for roll_deg in [0.0_f64, 2.0, 5.0, 10.0, 20.0] {
        let roll = roll_deg.to_radians();
        let rolled = compensated.map("rolled", |v| rotate_about_s3(v, 2.0 * roll));
        let stack = frame_correction_stack(roll / 2.0);
        let corrected = rolled.map("corrected", |v| apply_stack(&stack, v));
        println!(
            "{roll_deg:4.0}   {:13.4}   {:9.4}",
            intrinsic_qber(&rolled),
            intrinsic_qber(&corrected)
        );
    }
}
