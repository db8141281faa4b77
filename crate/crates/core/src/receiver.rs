//! Monte Carlo model of the polarization analysis unit: frame-correction
//! half-wave plate, passive 50:50 basis choice, two polarizing splitters and
//! four single-photon detectors with dark counts, gated to a window per
//! pulse.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::SensorStream;
use crate::polarization::{apply_stack, BbState, RetarderSetting, StokesVector};
use crate::source::SlotEmission;

pub const DEFAULT_T_BOB: f64 = 0.409;
pub const DEFAULT_ETA: f64 = 0.38;
pub const DEFAULT_WINDOW: f64 = 1.5e-9;

const RECORD_LEN: usize = 9;
const RECORDS_CSV_HEADER: &str = "timestamp_ps,channel";

#[derive(Debug, Error)]
pub enum ReceiverError {
    #[error("invalid receiver configuration: {0}")]
    InvalidConfig(String),
    #[error("record {index}: {msg}")]
    Format { index: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    /// Transmission from the receiver entrance to the detectors.
    pub t_bob: f64,
    /// Detector efficiency.
    pub eta: f64,
    /// Dark counts per second and detector.
    pub dark_rate_per_detector: f64,
    /// Coincidence window per pulse, seconds.
    pub window: f64,
    /// Beacon light reaching each detector, counts per second.
    pub beacon_leak_rate: f64,
    /// Actuation delay of the frame-correction plate, seconds.
    pub hwp_lag: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            t_bob: DEFAULT_T_BOB,
            eta: DEFAULT_ETA,
            dark_rate_per_detector: 0.0,
            window: DEFAULT_WINDOW,
            beacon_leak_rate: 0.0,
            hwp_lag: 0.0,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self, rep_rate: f64) -> Result<(), ReceiverError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(ReceiverError::InvalidConfig(format!("{name} = {v} must be in (0, 1]")))
            }
        };
        unit("t_bob", self.t_bob)?;
        unit("eta", self.eta)?;
        for (name, v) in [
            ("dark_rate_per_detector", self.dark_rate_per_detector),
            ("beacon_leak_rate", self.beacon_leak_rate),
            ("hwp_lag", self.hwp_lag),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ReceiverError::InvalidConfig(format!("{name} = {v} must be >= 0")));
            }
        }
        if !(self.window > 0.0 && self.window <= 1.0 / rep_rate) {
            return Err(ReceiverError::InvalidConfig(format!(
                "window = {} s must be positive and at most the slot period {} s",
                self.window,
                1.0 / rep_rate
            )));
        }
        Ok(())
    }

    /// Probability that one detector fires from dark counts or beacon
    /// leakage within the window of a single slot.
    pub fn noise_click_probability(&self) -> f64 {
        1.0 - (-(self.dark_rate_per_detector + self.beacon_leak_rate) * self.window).exp()
    }
}

/// Per-detector noise rate (dark plus beacon, counts/s) whose clicks make up
/// `share` of the sifted QBER when other detections occur with probability
/// `detections_per_slot`. Noise clicks are random, so half of them are
/// errors: `share = (D/2) / (S + D)` with `D` the noise clicks per slot over
/// all four detectors.
pub fn noise_rate_for_error_share(share: f64, detections_per_slot: f64, window: f64) -> f64 {
    let d = 2.0 * share * detections_per_slot / (1.0 - 2.0 * share);
    let p = d / 4.0;
    -(1.0 - p).ln() / window
}

/// One time tag from the detector electronics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub timestamp_ps: u64,
    pub channel: BbState,
}

/// Slot start in picoseconds.
pub fn slot_timestamp_ps(slot_index: u64, rep_rate: f64) -> u64 {
    (slot_index as f64 * 1e12 / rep_rate).round() as u64
}

/// Inverse of [`slot_timestamp_ps`].
pub fn slot_of_timestamp(timestamp_ps: u64, rep_rate: f64) -> u64 {
    (timestamp_ps as f64 * rep_rate / 1e12).round() as u64
}

/// Half-wave plate angle undoing a sender roll: half the latest roll
/// reported at or before `time - lag`, in radians. Zero before the first
/// report.
pub fn frame_correction_angle(sensor: &SensorStream, time: f64, lag: f64) -> f64 {
    sensor
        .reported_at(time - lag)
        .map_or(0.0, |deg| (deg as f64).to_radians() / 2.0)
}

/// Frame-correction optics for a given plate angle.
///
/// A half-wave plate alone mirrors linear polarization about its axis
/// (`α -> 2β - α`), so the receiver pairs it with a fixed plate at 0°; the
/// pair rotates `α -> α - 2β` and, with `β = θ/2`, undoes a roll `θ`.
pub fn frame_correction_stack(angle: f64) -> [RetarderSetting; 2] {
    [RetarderSetting::half_wave(angle), RetarderSetting::half_wave(0.0)]
}

/// Detector channel whose analyzer is the `+` state of each basis.
const PLUS: [BbState; 2] = [BbState::H, BbState::P45];
const MINUS: [BbState; 2] = [BbState::V, BbState::M45];

/// Probability of each detector firing for one surviving photon with
/// polarization `v`, indexed by [`BbState::index`].
pub fn detector_probabilities(v: StokesVector) -> [f64; 4] {
    let mut p = [0.0; 4];
    for basis in 0..2 {
        let plus = (1.0 + v.dot(PLUS[basis].ideal())) / 2.0;
        p[PLUS[basis].index()] = 0.5 * plus;
        p[MINUS[basis].index()] = 0.5 * (1.0 - plus);
    }
    p
}

/// Receiver state shared by all slots of a run.
#[derive(Debug, Clone)]
pub struct Receiver {
    cfg: ReceiverConfig,
    rep_rate: f64,
    noise_p: f64,
}

impl Receiver {
    pub fn new(cfg: ReceiverConfig, rep_rate: f64) -> Result<Self, ReceiverError> {
        cfg.validate(rep_rate)?;
        let noise_p = cfg.noise_click_probability();
        Ok(Self {
            cfg,
            rep_rate,
            noise_p,
        })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.cfg
    }

    pub fn rep_rate(&self) -> f64 {
        self.rep_rate
    }

    /// Appends the records of one slot to `out`, at most one per detector,
    /// ordered by channel code.
    ///
    /// `correction` is the retarder sequence between the channel and the
    /// analyzer. `roll` is the Poincaré-sphere rotation about `s3` caused by
    /// a sender roll, applied before `correction`.
    pub fn detect_into<R: Rng + ?Sized>(
        &self,
        emission: &SlotEmission,
        xi: f64,
        roll: f64,
        correction: &[RetarderSetting],
        rng: &mut R,
        out: &mut Vec<DetectionRecord>,
    ) {
        let survive = xi * self.cfg.t_bob * self.cfg.eta;
        let mut clicks = [false; 4];
        for ev in emission.events() {
            if ev.photon_count == 0 || survive <= 0.0 {
                continue;
            }
            let mut v: Option<StokesVector> = None;
            for _ in 0..ev.photon_count {
                if !rng.random_bool(survive) {
                    continue;
                }
                let v = *v.get_or_insert_with(|| {
                    let rolled = crate::polarization::rotate_about_s3(ev.stokes, roll);
                    apply_stack(correction, rolled)
                });
                let basis = usize::from(rng.random_bool(0.5));
                let p_plus = ((1.0 + v.dot(PLUS[basis].ideal())) / 2.0).clamp(0.0, 1.0);
                let det = if rng.random_bool(p_plus) {
                    PLUS[basis]
                } else {
                    MINUS[basis]
                };
                clicks[det.index()] = true;
            }
        }
        if self.noise_p > 0.0 {
            for c in &mut clicks {
                if rng.random::<f64>() < self.noise_p {
                    *c = true;
                }
            }
        }
        if clicks.iter().any(|&c| c) {
            let timestamp_ps = slot_timestamp_ps(emission.signal.slot_index, self.rep_rate);
            for det in BbState::ALL {
                if clicks[det.index()] {
                    out.push(DetectionRecord {
                        timestamp_ps,
                        channel: det,
                    });
                }
            }
        }
    }
}

/// Detection records of one slot.
pub fn detect_slot<R: Rng + ?Sized>(
    emission: &SlotEmission,
    xi: f64,
    cfg: &ReceiverConfig,
    rep_rate: f64,
    correction: &[RetarderSetting],
    rng: &mut R,
) -> Result<Vec<DetectionRecord>, ReceiverError> {
    let rx = Receiver::new(cfg.clone(), rep_rate)?;
    let mut out = Vec::new();
    rx.detect_into(emission, xi, 0.0, correction, rng, &mut out);
    Ok(out)
}

/// Binary record stream: repeating 9-byte little-endian records, an 8-byte
/// timestamp in picoseconds followed by a channel code (0=H, 1=V, 2=P45,
/// 3=M45).
pub fn write_records(mut w: impl Write, records: &[DetectionRecord]) -> Result<(), ReceiverError> {
    let mut buf = Vec::with_capacity(records.len() * RECORD_LEN);
    for r in records {
        buf.extend_from_slice(&r.timestamp_ps.to_le_bytes());
        buf.push(r.channel.code());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_records(mut r: impl Read) -> Result<Vec<DetectionRecord>, ReceiverError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % RECORD_LEN != 0 {
        return Err(ReceiverError::Format {
            index: bytes.len() / RECORD_LEN,
            msg: format!("truncated record ({} trailing bytes)", bytes.len() % RECORD_LEN),
        });
    }
    let mut out = Vec::with_capacity(bytes.len() / RECORD_LEN);
    let mut last = 0u64;
    for (index, chunk) in bytes.chunks_exact(RECORD_LEN).enumerate() {
        let timestamp_ps = u64::from_le_bytes(chunk[..8].try_into().unwrap());
        let channel = BbState::from_code(chunk[8]).ok_or_else(|| ReceiverError::Format {
            index,
            msg: format!("invalid channel code {}", chunk[8]),
        })?;
        if timestamp_ps < last {
            return Err(ReceiverError::Format {
                index,
                msg: format!("timestamp {timestamp_ps} decreases (previous {last})"),
            });
        }
        last = timestamp_ps;
        out.push(DetectionRecord {
            timestamp_ps,
            channel,
        });
    }
    Ok(out)
}

/// CSV mirror of the binary stream: header `timestamp_ps,channel`, channel
/// as its numeric code.
pub fn write_records_csv(mut w: impl Write, records: &[DetectionRecord]) -> Result<(), ReceiverError> {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(records.len() * 16 + 32);
    out.push_str(RECORDS_CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{},{}", r.timestamp_ps, r.channel.code()).unwrap();
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_records_csv(r: impl BufRead) -> Result<Vec<DetectionRecord>, ReceiverError> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != RECORDS_CSV_HEADER {
        return Err(ReceiverError::Format {
            index: 0,
            msg: format!("expected header `{RECORDS_CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for (index, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fmt_err = |msg: String| ReceiverError::Format { index, msg };
        let (ts, ch) = line
            .split_once(',')
            .ok_or_else(|| fmt_err("expected two fields".into()))?;
        let timestamp_ps = ts.trim().parse().map_err(|e| fmt_err(format!("timestamp: {e}")))?;
        let code: u8 = ch.trim().parse().map_err(|e| fmt_err(format!("channel: {e}")))?;
        let channel = BbState::from_code(code).ok_or_else(|| fmt_err(format!("invalid channel {code}")))?;
        out.push(DetectionRecord {
            timestamp_ps,
            channel,
        });
    }
    Ok(out)
}

pub fn save_records(path: impl AsRef<Path>, records: &[DetectionRecord]) -> Result<(), ReceiverError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_records(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>, ReceiverError> {
    read_records(std::io::BufReader::new(std::fs::File::open(path)?))
}
