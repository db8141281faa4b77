//! Fluctuating free-space link between a hand-held sender and a fixed
//! receiver.
//!
//! The relative link efficiency `xi` scales the static receiver transmission:
//! `T(t) = xi(t) * T_Bob`. A trace stores `xi` and the sender roll angle per
//! time bin.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BIN_DURATION: f64 = 0.010;
/// Reporting resolution of the attitude sensor, degrees.
pub const SENSOR_RESOLUTION_DEG: f64 = 1.0;
/// Minimum spacing between sensor reports, seconds.
pub const SENSOR_MIN_INTERVAL: f64 = 0.1;

const TRACE_HEADER: &str = "bin_index,xi,theta_deg";
/// Sub-steps per bin used to low-pass the pointing error.
const SUBSTEPS: usize = 10;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: xi = {value} outside [0, 1]")]
    Range { line: usize, value: f64 },
    #[error("invalid jitter model: {0}")]
    InvalidModel(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-bin link efficiency and sender roll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTrace {
    pub bin_duration: f64,
    pub xi: Vec<f64>,
    pub theta_deg: Vec<f64>,
    /// Instant the sender leaves its mount.
    pub pickup_time: f64,
}

impl LinkTrace {
    pub fn new(
        bin_duration: f64,
        xi: Vec<f64>,
        theta_deg: Vec<f64>,
        pickup_time: f64,
    ) -> Result<Self, ChannelError> {
        let trace = Self {
            bin_duration,
            xi,
            theta_deg,
            pickup_time,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Sender fixed on its mount for the whole run.
    pub fn static_link(duration: f64, bin_duration: f64) -> Self {
        let n = (duration / bin_duration).ceil().max(0.0) as usize;
        Self {
            bin_duration,
            xi: vec![1.0; n],
            theta_deg: vec![0.0; n],
            pickup_time: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.bin_duration > 0.0) {
            return Err(ChannelError::InvalidTrace(format!(
                "bin_duration = {} must be > 0",
                self.bin_duration
            )));
        }
        if self.xi.len() != self.theta_deg.len() {
            return Err(ChannelError::InvalidTrace(format!(
                "{} xi values but {} angles",
                self.xi.len(),
                self.theta_deg.len()
            )));
        }
        if let Some((k, &x)) = self
            .xi
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(ChannelError::Range { line: k + 1, value: x });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.xi.len() as f64 * self.bin_duration
    }

    pub fn bin_at(&self, time: f64) -> Option<usize> {
        if time < 0.0 {
            return None;
        }
        let k = (time / self.bin_duration) as usize;
        (k < self.xi.len()).then_some(k)
    }

    /// Efficiency at `time`; zero outside the trace.
    pub fn xi_at(&self, time: f64) -> f64 {
        self.bin_at(time).map_or(0.0, |k| self.xi[k])
    }

    pub fn theta_at(&self, time: f64) -> f64 {
        match self.bin_at(time) {
            Some(k) => self.theta_deg[k],
            None => self.theta_deg.last().copied().unwrap_or(0.0),
        }
    }

    /// Mean efficiency over bins at or after `start_bin`.
    pub fn mean_xi_from(&self, start_bin: usize) -> f64 {
        let tail = &self.xi[start_bin.min(self.xi.len())..];
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }

    /// CSV with header `bin_index,xi,theta_deg`, preceded by one `#` line
    /// carrying `bin_duration` and `pickup_time`. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), ChannelError> {
        let mut out = String::with_capacity(32 * (self.xi.len() + 2));
        writeln!(
            out,
            "# bin_duration={} pickup_time={}",
            self.bin_duration, self.pickup_time
        )
        .unwrap();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for (k, (x, t)) in self.xi.iter().zip(&self.theta_deg).enumerate() {
            writeln!(out, "{k},{x},{t}").unwrap();
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self, ChannelError> {
        let mut bin_duration = DEFAULT_BIN_DURATION;
        let mut pickup_time = 0.0;
        let mut header_seen = false;
        let mut xi = Vec::new();
        let mut theta = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let Some((key, value)) = kv.split_once('=') else {
                        continue;
                    };
                    let parsed = || {
                        value.parse::<f64>().map_err(|e| ChannelError::Parse {
                            line: line_no,
                            msg: format!("{key}: {e}"),
                        })
                    };
                    match key {
                        "bin_duration" => bin_duration = parsed()?,
                        "pickup_time" => pickup_time = parsed()?,
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != TRACE_HEADER {
                    return Err(ChannelError::Parse {
                        line: line_no,
                        msg: format!("expected header `{TRACE_HEADER}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(ChannelError::Parse {
                    line: line_no,
                    msg: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let index: usize = fields[0].trim().parse().map_err(|e| ChannelError::Parse {
                line: line_no,
                msg: format!("bin_index: {e}"),
            })?;
            if index != xi.len() {
                return Err(ChannelError::Parse {
                    line: line_no,
                    msg: format!("bin_index {index} out of sequence, expected {}", xi.len()),
                });
            }
            let num = |s: &str, name: &str| {
                s.trim().parse::<f64>().map_err(|e| ChannelError::Parse {
                    line: line_no,
                    msg: format!("{name}: {e}"),
                })
            };
            let x = num(fields[1], "xi")?;
            if !(0.0..=1.0).contains(&x) {
                return Err(ChannelError::Range { line: line_no, value: x });
            }
            xi.push(x);
            theta.push(num(fields[2], "theta_deg")?);
        }
        if !header_seen {
            return Err(ChannelError::Parse {
                line: 1,
                msg: "empty trace file".into(),
            });
        }
        Self::new(bin_duration, xi, theta, pickup_time)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ChannelError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

pub fn load_link_trace(path: impl AsRef<Path>) -> Result<LinkTrace, ChannelError> {
    let f = std::fs::File::open(path)?;
    LinkTrace::read_csv(std::io::BufReader::new(f))
}

/// Stochastic stand-in for a person aiming the sender by hand.
///
/// Angles in degrees, times in seconds. The defaults reproduce link
/// efficiencies around 0.2 and optimal acceptance thresholds around 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterModel {
    /// Radial rms of the hand pointing error.
    pub pointing_rms: f64,
    pub correlation_time: f64,
    /// Largest pointing error the beam steering can follow.
    pub tracking_range: f64,
    /// Radial rms of the error left after tracking.
    pub tracking_residual_rms: f64,
    pub aiming_delay_mean: f64,
    pub pickup_time: f64,
    /// Residual error at which coupling drops to one half.
    pub coupling_half_width: f64,
    /// Diffusion constant of the sender roll, deg/sqrt(s).
    pub roll_diffusion: f64,
}

impl Default for JitterModel {
    fn default() -> Self {
        Self {
            pointing_rms: 3.0,
            correlation_time: 0.3,
            tracking_range: 3.0,
            tracking_residual_rms: 2.6,
            aiming_delay_mean: 8.5,
            pickup_time: 2.0,
            coupling_half_width: 1.2,
            roll_diffusion: 2.0,
        }
    }
}

impl JitterModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            ("pointing_rms", self.pointing_rms),
            ("correlation_time", self.correlation_time),
            ("tracking_range", self.tracking_range),
            ("tracking_residual_rms", self.tracking_residual_rms),
            ("aiming_delay_mean", self.aiming_delay_mean),
            ("coupling_half_width", self.coupling_half_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ChannelError::InvalidModel(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.pickup_time >= 0.0) || !(self.roll_diffusion >= 0.0) {
            return Err(ChannelError::InvalidModel(
                "pickup_time and roll_diffusion must be >= 0".into(),
            ));
        }
        if self.tracking_range <= self.tracking_residual_rms {
            return Err(ChannelError::InvalidModel(format!(
                "tracking_range {} must exceed tracking_residual_rms {}",
                self.tracking_range, self.tracking_residual_rms
            )));
        }
        Ok(())
    }

    /// Coupling for a hand pointing error of `|error|` degrees: zero outside
    /// the tracking range, otherwise Gaussian in the residual left by the
    /// tracking loop.
    pub fn coupling(&self, error: [f64; 2]) -> f64 {
        let radius = error[0].hypot(error[1]);
        if radius > self.tracking_range {
            return 0.0;
        }
        let residual = radius * self.residual_gain();
        (-(residual / self.coupling_half_width).powi(2) * std::f64::consts::LN_2).exp()
    }

    /// Fraction of the pointing error the tracking leaves behind.
    fn residual_gain(&self) -> f64 {
        (self.tracking_residual_rms / self.pointing_rms).min(1.0)
    }
}

/// Generates a trace: mounted (`xi = 1`) until pickup, dark while the user
/// aims, then an Ornstein-Uhlenbeck pointing error mapped through
/// [`JitterModel::coupling`] and averaged over each bin.
pub fn simulate_link_trace(
    model: &JitterModel,
    duration: f64,
    seed: u64,
) -> Result<LinkTrace, ChannelError> {
    model.validate()?;
    if !(duration > 0.0) {
        return Err(ChannelError::InvalidModel(format!("duration {duration} must be > 0")));
    }
    let bin = DEFAULT_BIN_DURATION;
    let n_bins = (duration / bin).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let aiming = Gamma::new(4.0, model.aiming_delay_mean / 4.0)
        .map_err(|e| ChannelError::InvalidModel(e.to_string()))?
        .sample(&mut rng);
    let link_start = model.pickup_time + aiming;

    let dt = bin / SUBSTEPS as f64;
    let decay = (-dt / model.correlation_time).exp();
    let kick = (1.0 - decay * decay).sqrt();
    let sigma_axis = model.pointing_rms / std::f64::consts::SQRT_2;
    let roll_step = model.roll_diffusion * bin.sqrt();

    // Unit-variance state, scaled on use so that traces for different
    // pointing_rms share the same random path.
    let mut z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let mut theta = 0.0;
    let mut xi = Vec::with_capacity(n_bins);
    let mut theta_deg = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let t = k as f64 * bin;
        let mut acc = 0.0;
        for _ in 0..SUBSTEPS {
            for c in &mut z {
                let n: f64 = rng.sample(StandardNormal);
                *c = decay * *c + kick * n;
            }
            acc += model.coupling([z[0] * sigma_axis, z[1] * sigma_axis]);
        }
        let roll_kick: f64 = rng.sample(StandardNormal);
        let value = if t < model.pickup_time {
            1.0
        } else if t < link_start {
            0.0
        } else {
            (acc / SUBSTEPS as f64).clamp(0.0, 1.0)
        };
        if t >= model.pickup_time {
            theta += roll_step * roll_kick;
        }
        xi.push(value);
        theta_deg.push(theta);
    }
    LinkTrace::new(bin, xi, theta_deg, model.pickup_time)
}


/// One report of the sender's attitude sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorUpdate {
    pub time: f64,
    pub theta_deg: i32,
}

/// Quantized roll reports as received over the side channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorStream {
    pub updates: Vec<SensorUpdate>,
}

impl SensorStream {
    /// Latest reported roll at or before `time`, degrees.
    pub fn reported_at(&self, time: f64) -> Option<i32> {
        let idx = self.updates.partition_point(|u| u.time <= time);
        idx.checked_sub(1).map(|i| self.updates[i].theta_deg)
    }
}

/// Emits the initial roll and afterwards a report whenever the rounded
/// angle moves by at least one degree, no more often than every 0.1 s.
pub fn sensor_stream_from_trace(trace: &LinkTrace) -> SensorStream {
    let mut updates: Vec<SensorUpdate> = Vec::new();
    let min_gap_bins = (SENSOR_MIN_INTERVAL / trace.bin_duration - 1e-9).ceil() as usize;
    let mut last_bin = 0usize;
    for (k, &theta) in trace.theta_deg.iter().enumerate() {
        let q = (theta / SENSOR_RESOLUTION_DEG).round() as i32;
        let time = k as f64 * trace.bin_duration;
        match updates.last() {
            None => {
                updates.push(SensorUpdate { time, theta_deg: q });
                last_bin = k;
            }
            Some(last) => {
                if (q - last.theta_deg).abs() >= 1 && k - last_bin >= min_gap_bins {
                    updates.push(SensorUpdate { time, theta_deg: q });
                    last_bin = k;
                }
            }
        }
    }
    SensorStream { updates }
}
