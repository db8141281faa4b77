//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! fails.

use handheld_qkd::distill::{
    decoy_secret_rate, gllp_secret_rate, sift, tagged_fraction, DecoyOptions, DecoyStatus,
    GllpInputs,
};
use handheld_qkd::polarization::{
    optimize_compensation, preparation_quality, BbState, PreparedStateSet, StokesVector,
};
use handheld_qkd::receiver::ReceiverConfig;
use handheld_qkd::scenario::{
    distill_records, reproduce, simulate, simulate_decoy, DecoySimConfig, DistillOptions,
    ScenarioConfig, Table, ThresholdMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gate {
    failed: usize,
}

impl Gate {
    fn check(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("{} criterion {id}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    ((value - target) / target).abs() <= rel
}

fn criterion_1(g: &mut Gate) {
    let r = gllp_secret_rate(&GllpInputs {
        r_sift: 324_750.0,
        e: 0.021,
        mu: 0.042,
        transmission: 0.409,
        eta: 0.38,
        q: 0.75,
        f: 1.22,
    })
    .unwrap();
    g.check(
        1,
        "static GLLP rate",
        within(r.r_sec, 103_200.0, 0.05),
        format!("{:.1} kbps vs 103.2 kbps (5 %)", r.r_sec / 1e3),
    );
}

fn criterion_2(g: &mut Gate) {
    let rows = reproduce(Table::Handheld).unwrap();
    let (trials, avg) = rows.split_at(rows.len() - 1);
    let worst = trials
        .iter()
        .map(|r| r.relative_error().abs())
        .fold(0.0, f64::max);
    let ok = trials.len() == 8 && worst <= 0.05 && avg[0].agrees(0.05);
    g.check(
        2,
        "hand-held table",
        ok,
        format!(
            "8 rows, worst {:.2} %, average {:.2} kbps vs 7.1 kbps",
            100.0 * worst,
            avg[0].computed
        ),
    );
}

fn criterion_3(g: &mut Gate) {
    let pq = preparation_quality(&PreparedStateSet::sender_output()).unwrap();
    let ok = (pq.q - 0.75).abs() <= 0.01 && pq.worst_pair == (BbState::V, BbState::P45);
    g.check(
        3,
        "preparation quality",
        ok,
        format!("q = {:.4}, pair ({}, {})", pq.q, pq.worst_pair.0, pq.worst_pair.1),
    );
}

fn criterion_4(g: &mut Gate) {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
        seed = 4
        duration = 1.0
        time_scale = 0.1
        ground_truth = false
        [source]
        states = "receiver_compensated"
        dop = 0.99
        [calibration]
        target_qber = 0.021
        noise_error_share = 0.00075
        "#,
    )
    .unwrap();
    let out = simulate(&cfg).unwrap();
    let m = &out.metadata;
    let rate = out.records.len() as f64 / m.duration / m.time_scale;
    let key = sift(&out.pattern, &out.records, m.simulated_rep_rate()).unwrap();
    let qber = key.errors() as f64 / key.len() as f64;
    let ok = m.slots >= 10_000_000 && within(rate, 649_500.0, 0.05) && (qber - 0.021).abs() <= 0.005;
    g.check(
        4,
        "static end-to-end simulation",
        ok,
        format!(
            "{} slots, {:.1} kbps vs 649.5 kbps, QBER {:.3} % vs 2.1 %",
            m.slots,
            rate / 1e3,
            100.0 * qber
        ),
    );
}

/// Closed form summed as series without cancellation:
/// `Δ = Σ_{n>=2} μ^n/n! / (Tη Σ_{n>=1} μ^n/n!)`.
fn delta_oracle(mu: f64, t: f64, eta: f64) -> f64 {
    let (mut multi, mut nonvac) = (0.0, 0.0);
    let mut term = 1.0;
    for n in 1..60 {
        term *= mu / n as f64;
        nonvac += term;
        if n >= 2 {
            multi += term;
        }
    }
    multi / (t * eta * nonvac)
}

fn criterion_5(g: &mut Gate) {
    let cases = [(0.409, 0.135, 0.001), (0.220, 0.250, 0.002)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (t, published, tol) in cases {
        let lib = tagged_fraction(0.042, t, 0.38).unwrap();
        let oracle = delta_oracle(0.042, t, 0.38);
        ok &= (lib - oracle).abs() < 1e-12 && (lib - published).abs() <= tol;
        detail.push(format!("T={t}: {lib:.5} (oracle {oracle:.5}, published {published})"));
    }
    g.check(5, "tagged fraction", ok, detail.join("; "));
}

fn criterion_6(g: &mut Gate) {
    let rows = reproduce(Table::Decoy).unwrap();
    g.check(
        6,
        "decoy projection",
        rows[0].computed > 100.0,
        format!("{:.1} kbps > 100 kbps", rows[0].computed),
    );
}

fn criterion_7(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let runs = 20;
    let mut held = 0;
    let mut min_y1_margin = f64::INFINITY;
    let mut min_e1_margin = f64::INFINITY;
    for run in 0..runs {
        let misalign: f64 = rng.random_range(0.2..0.6);
        let cfg = DecoySimConfig {
            mu: rng.random_range(0.3..0.8),
            nu: rng.random_range(0.1..0.25),
            xi: rng.random_range(0.3..1.0),
            states: PreparedStateSet::ideal().map("misaligned", |v| {
                handheld_qkd::polarization::rotate_about_s3(v, misalign)
            }),
            receiver: ReceiverConfig {
                dark_rate_per_detector: rng.random_range(100.0..5000.0),
                ..ReceiverConfig::default()
            },
            ..DecoySimConfig::default()
        };
        let truth = simulate_decoy(&cfg, 700 + run).unwrap();
        let r = decoy_secret_rate(&truth.inputs, &DecoyOptions::default()).unwrap();
        let y1_ok = r.status == DecoyStatus::Ok && r.y1_lower <= truth.y1_true;
        let e1_ok = r.e1_upper >= truth.e1_true;
        held += usize::from(y1_ok && e1_ok);
        min_y1_margin = min_y1_margin.min((truth.y1_true - r.y1_lower) / truth.y1_true);
        min_e1_margin = min_e1_margin.min((r.e1_upper - truth.e1_true) / truth.e1_true);
    }
    g.check(
        7,
        "decoy bound soundness",
        held == runs as usize,
        format!(
            "{held}/{runs} runs, smallest margins y1 {:.2} %, e1 {:.2} %",
            100.0 * min_y1_margin,
            100.0 * min_e1_margin
        ),
    );
}

/// Uniform random rotation from a unit quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (w, x, y, z) = (
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    );
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn criterion_8(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_residual: f64 = 0.0;
    let mut worst_distance: f64 = 0.0;
    for _ in 0..100 {
        let m = random_rotation(&mut rng);
        let rotated = PreparedStateSet::ideal().map("rotated", |v| {
            let a = v.to_array();
            StokesVector::from_array(std::array::from_fn(|i| (0..3).map(|j| m[i][j] * a[j]).sum()))
        });
        let comp = optimize_compensation(&rotated).unwrap();
        worst_residual = worst_residual.max(comp.residual_qber);
        for (state, v) in rotated.iter() {
            worst_distance = worst_distance.max(comp.apply(v).distance(state.ideal()));
        }
    }
    g.check(
        8,
        "compensation optimizer",
        worst_residual < 1e-6 && worst_distance < 1e-3,
        format!("100 rotations, worst residual {worst_residual:.2e}, worst distance {worst_distance:.2e}"),
    );
}

/// Largest drop below the running maximum while rising to the peak, and
/// largest rise above the running minimum after it, relative to the peak.
fn unimodality_defect(values: &[f64]) -> f64 {
    let peak = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let top = values[peak];
    if top <= 0.0 {
        return f64::INFINITY;
    }
    let mut defect: f64 = 0.0;
    let mut run_max = f64::NEG_INFINITY;
    for &v in &values[..=peak] {
        run_max = run_max.max(v);
        defect = defect.max(run_max - v);
    }
    let mut run_min = f64::INFINITY;
    for &v in &values[peak..] {
        run_min = run_min.min(v);
        defect = defect.max(v - run_min);
    }
    defect / top
}

fn criterion_9(g: &mut Gate) {
    let mut ok = true;
    let mut detail = Vec::new();
    for seed in [1u64, 2, 3] {
        let cfg = ScenarioConfig::from_toml_str(&format!(
            r#"
            seed = {seed}
            duration = 30.0
            time_scale = 0.01
            ground_truth = false
            [source]
            states = "receiver_compensated"
            dop = 0.99
            [receiver]
            hwp_lag = 0.05
            [channel]
            mode = "handheld"
            [calibration]
            target_qber = 0.021
            noise_error_share = 0.00075
            "#
        ))
        .unwrap();
        let out = simulate(&cfg).unwrap();
        let mut opts = DistillOptions::new(out.metadata.clone());
        opts.threshold = ThresholdMode::Optimize;
        let d = distill_records(&out.records, &out.pattern, &opts).unwrap();
        let has_dark = d.bins.bins.iter().any(|b| b.xi_estimate < 0.05);
        let has_static = d.bins.bins.iter().any(|b| b.xi_estimate > 0.95);
        let scan = d.scan.unwrap();
        let rates: Vec<f64> = scan.points.iter().map(|p| p.r_sec).collect();
        let defect = unimodality_defect(&rates);
        let x = scan.best.xi_thr;
        let interior = x > 0.0 && x < 1.0;
        ok &= has_dark && has_static && interior && defect <= 0.05;
        detail.push(format!("seed {seed}: xi_thr {x:.2}, defect {:.1} %", 100.0 * defect));
    }
    g.check(9, "threshold unimodality", ok, detail.join("; "));
}

fn main() {
    let mut g = Gate { failed: 0 };
    criterion_1(&mut g);
    criterion_2(&mut g);
    criterion_3(&mut g);
    criterion_4(&mut g);
    criterion_5(&mut g);
    criterion_6(&mut g);
    criterion_7(&mut g);
    criterion_8(&mut g);
    criterion_9(&mut g);
    if g.failed > 0 {
        println!("{} criteria failed", g.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
