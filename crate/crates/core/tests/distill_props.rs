use handheld_qkd::distill::{
    estimate_qber, gllp_secret_rate, sift, tagged_fraction, GllpInputs, SiftedBit, SiftedKey,
};
use handheld_qkd::polarization::BbState;
use handheld_qkd::receiver::{slot_timestamp_ps, DetectionRecord};
use handheld_qkd::source::build_pattern;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> GllpInputs {
    GllpInputs {
        r_sift: 100_000.0,
        e: 0.02,
        mu: 0.042,
        transmission: 0.3,
        eta: 0.38,
        q: 0.75,
        f: 1.22,
    }
}

#[test]
fn secret_rate_never_grows_with_qber() {
    for transmission in [0.15, 0.25, 0.409] {
        let mut last = f64::INFINITY;
        for k in 1..=12 {
            let e = 0.005 * k as f64;
            let r = gllp_secret_rate(&GllpInputs {
                e,
                transmission,
                ..base()
            })
            .unwrap()
            .r_sec;
            assert!(r <= last, "T {transmission}, e {e}: {r} > {last}");
            last = r;
        }
    }
}

#[test]
fn tagged_fraction_monotonicity() {
    let mus = [0.01, 0.02, 0.03, 0.05, 0.07];
    let ts = [0.2, 0.3, 0.409, 0.6, 0.9];
    let etas = [0.38, 0.6, 0.9];
    for &eta in &etas {
        for &t in &ts {
            let row: Vec<f64> = mus.iter().map(|&mu| tagged_fraction(mu, t, eta).unwrap()).collect();
            assert!(row.windows(2).all(|w| w[1] > w[0]), "not increasing in mu: {row:?}");
        }
        for &mu in &mus {
            let col: Vec<f64> = ts.iter().map(|&t| tagged_fraction(mu, t, eta).unwrap()).collect();
            assert!(col.windows(2).all(|w| w[1] < w[0]), "not decreasing in T: {col:?}");
        }
    }
    for &mu in &mus {
        let by_eta: Vec<f64> = etas.iter().map(|&eta| tagged_fraction(mu, 0.5, eta).unwrap()).collect();
        assert!(by_eta.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn qber_interval_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let p = 0.03;
    let mut covered = 0;
    for _ in 0..100 {
        let pairs = (0..5000u64)
            .map(|slot| {
                let alice_bit = rng.random_range(0..2u8);
                let flip = rng.random_bool(p);
                SiftedBit {
                    alice_bit,
                    bob_bit: alice_bit ^ u8::from(flip),
                    slot_index: slot,
                    timestamp_ps: slot * 10_000,
                }
            })
            .collect();
        let key = SiftedKey {
            pairs,
            ..SiftedKey::default()
        };
        covered += usize::from(estimate_qber(&key).unwrap().contains(p));
    }
    assert!(covered >= 93, "{covered}/100");
}

#[test]
fn sifting_a_foreign_pattern_gives_half_errors() {
    let own = build_pattern(1, 131_056).unwrap();
    let foreign = build_pattern(2, 131_056).unwrap();
    // perfect detections of the own pattern, one slot in three
    let records: Vec<DetectionRecord> = (0..300_000u64)
        .step_by(3)
        .map(|slot| DetectionRecord {
            timestamp_ps: slot_timestamp_ps(slot, 1e8),
            channel: own.symbol(slot).state(),
        })
        .collect();
    let good = sift(&own, &records, 1e8).unwrap();
    assert_eq!(good.errors(), 0);
    assert_eq!(good.len(), records.len());
    let bad = sift(&foreign, &records, 1e8).unwrap();
    let qber = bad.errors() as f64 / bad.len() as f64;
    assert!((qber - 0.5).abs() < 0.02, "{qber}");
    assert!((bad.len() as f64 / records.len() as f64 - 0.5).abs() < 0.02);
    assert!(BbState::ALL.len() == 4);
}
