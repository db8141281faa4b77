//! State tomography of the four prepared states: Stokes vectors from
//! intensity readings, degree of polarization, preparation quality and
//! intrinsic error for each built-in state set.
//!
//! cargo run --example tomography

use handheld_qkd::polarization::{
    intrinsic_qber, preparation_quality, stokes_from_intensities, PreparedStateSet,
};

fn main() {
    // Power-meter readings (arbitrary units) behind H/V, ±45 and R/L analyzers.
    let readings = [
        ("H", [98.1, 1.9, 52.3, 47.7, 50.9, 49.1]),
        ("V", [2.2, 97.8, 47.2, 52.8, 49.4, 50.6]),
        ("P45", [51.1, 48.9, 97.6, 2.4, 51.8, 48.2]),
        ("M45", [48.3, 51.7, 2.1, 97.9, 47.9, 52.1]),
    ];
    println!("state      S1       S2       S3     DOP");
    for (name, i) in readings {
        let v = stokes_from_intensities(i[0], i[1], i[2], i[3], i[4], i[5]).expect("valid readings");
        let [s1, s2, s3] = v.to_array();
        let dop = v.degree_of_polarization().expect("physical state");
        println!("{name:<6} {s1:+7.4}  {s2:+7.4}  {s3:+7.4}  {dop:6.4}");
    }

    println!("\nset                        q    worst pair   e_int");
    for set in [
        PreparedStateSet::ideal(),
        PreparedStateSet::sender_output(),
        PreparedStateSet::receiver_uncompensated(),
        PreparedStateSet::receiver_compensated(),
    ] {
        let pq = preparation_quality(&set).expect("pure-enough states");
        println!(
            "{:<24} {:6.3}   {:>4}/{:<4}   {:6.4}",
            set.label,
            pq.q,
            pq.worst_pair.0.name(),
            pq.worst_pair.1.name(),
            intrinsic_qber(&set)
        );
    }
}
