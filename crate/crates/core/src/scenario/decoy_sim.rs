//! Three-intensity (signal, weak decoy, vacuum) run with photon-number
//! provenance, for checking the decoy bounds against the truth.

use rand::Rng;
use rayon::prelude::*;

use crate::distill::DecoyInputs;
use crate::polarization::PreparedStateSet;
use crate::receiver::{DetectionRecord, Receiver, ReceiverConfig};
use crate::source::{block_rng, build_pattern, EmissionEvent, PhotonNumber, SlotEmission, SLOT_BLOCK};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoySimConfig {
    pub mu: f64,
    pub nu: f64,
    pub signal_fraction: f64,
    /// The rest after signal and decoy pulses are vacuum pulses.
    pub decoy_fraction: f64,
    /// Link efficiency, constant for the run.
    pub xi: f64,
    pub states: PreparedStateSet,
    pub receiver: ReceiverConfig,
    pub rep_rate: f64,
    pub slots: u64,
}

impl Default for DecoySimConfig {
    fn default() -> Self {
        Self {
            mu: 0.5,
            nu: 0.2,
            signal_fraction: 0.5,
            decoy_fraction: 0.4,
            xi: 1.0,
            states: PreparedStateSet::receiver_compensated(),
            receiver: ReceiverConfig {
                dark_rate_per_detector: 2000.0,
                ..ReceiverConfig::default()
            },
            rep_rate: crate::source::DEFAULT_REP_RATE,
            slots: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoySimResult {
    /// Gains and errors as an experiment would measure them.
    pub inputs: DecoyInputs,
    /// Fraction of one-photon pulses that gave a single click.
    pub y1_true: f64,
    /// Error rate of the sifted bits from one-photon pulses.
    pub e1_true: f64,
    pub single_photon_slots: u64,
}

/// Counts per intensity class.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    slots: u64,
    clicks: u64,
    sifted: u64,
    errors: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.slots += o.slots;
        self.clicks += o.clicks;
        self.sifted += o.sifted;
        self.errors += o.errors;
    }
}

/// Signal, decoy, vacuum, one-photon pulses.
type Tallies = [Tally; 4];

/// Detection events are slots with exactly one click, so gains, yields
/// and errors all refer to the same event.
pub fn simulate_decoy(cfg: &DecoySimConfig, seed: u64) -> Result<DecoySimResult, Error> {
    let vacuum_fraction = 1.0 - cfg.signal_fraction - cfg.decoy_fraction;
    if !(cfg.signal_fraction > 0.0 && cfg.decoy_fraction > 0.0 && vacuum_fraction > 0.0) {
        return Err(Error::Config(
            "decoy: signal, decoy and vacuum fractions must all be positive".into(),
        ));
    }
    let rx = Receiver::new(cfg.receiver.clone(), cfg.rep_rate)?;
    let pattern = build_pattern(seed.rotate_left(17), crate::source::DEFAULT_PATTERN_LENGTH)?;
    let signal = PhotonNumber::new(cfg.mu)?;
    let decoy = PhotonNumber::new(cfg.nu)?;
    let blocks = cfg.slots.div_ceil(SLOT_BLOCK);
    let totals = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(seed, block);
            let mut t: Tallies = Default::default();
            let mut buf: Vec<DetectionRecord> = Vec::with_capacity(4);
            let first = block * SLOT_BLOCK;
            for slot in first..(first + SLOT_BLOCK).min(cfg.slots) {
                let u: f64 = rng.random();
                let class = if u < cfg.signal_fraction {
                    0
                } else if u < cfg.signal_fraction + cfg.decoy_fraction {
                    1
                } else {
                    2
                };
                let n = match class {
                    0 => signal.sample(&mut rng),
                    1 => decoy.sample(&mut rng),
                    _ => 0,
                };
                let label = pattern.symbol(slot).state();
                let emission = SlotEmission {
                    signal: EmissionEvent {
                        slot_index: slot,
                        photon_count: n,
                        state_label: label,
                        stokes: cfg.states.get(label),
                        is_background: false,
                    },
                    background: None,
                };
                buf.clear();
                rx.detect_into(&emission, cfg.xi, 0.0, &[], &mut rng, &mut buf);
                let mut outcome = Tally {
                    slots: 1,
                    ..Tally::default()
                };
                if let [rec] = buf.as_slice() {
                    outcome.clicks = 1;
                    if rec.channel.basis() == label.basis() {
                        outcome.sifted = 1;
                        outcome.errors = u64::from(rec.channel.bit() != label.bit());
                    }
                }
                t[class].add(&outcome);
                if n == 1 {
                    t[3].add(&outcome);
                }
            }
            t
        })
        .reduce(Tallies::default, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.add(y);
            }
            a
        });

    let gain = |t: &Tally| t.clicks as f64 / t.slots as f64;
    let error = |t: &Tally, what: &str| {
        if t.sifted == 0 {
            Err(Error::Config(format!("decoy: no sifted {what} events, run more slots")))
        } else {
            Ok(t.errors as f64 / t.sifted as f64)
        }
    };
    let inputs = DecoyInputs {
        mu: cfg.mu,
        nu: cfg.nu,
        q_mu: gain(&totals[0]),
        q_nu: gain(&totals[1]),
        e_mu: error(&totals[0], "signal")?,
        e_nu: error(&totals[1], "decoy")?,
        y0: gain(&totals[2]),
        signal_fraction: cfg.signal_fraction,
        f: crate::distill::DEFAULT_EC_EFFICIENCY,
    };
    Ok(DecoySimResult {
        inputs,
        y1_true: gain(&totals[3]),
        e1_true: error(&totals[3], "single-photon")?,
        single_photon_slots: totals[3].slots,
    })
}
