use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::JitterModel;
use crate::distill::{DEFAULT_EC_EFFICIENCY, STATIC_RAW_RATE};
use crate::polarization::PreparedStateSet;
use crate::receiver::ReceiverConfig;
use crate::source::{SourceConfig, DEFAULT_MU, DEFAULT_PATTERN_LENGTH, DEFAULT_REP_RATE};
use crate::Error;

/// A complete run description, read from TOML.
///
/// ```toml
/// seed = 7
/// duration = 0.2
///
/// [source]
/// states = "receiver_compensated"
/// dop = 0.99
///
/// [channel]
/// mode = "static"
///
/// [calibration]
/// target_qber = 0.021
/// noise_error_share = 0.00075
/// ```
///
/// Unknown keys are rejected. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Wall-clock seconds represented by the run.
    pub duration: f64,
    /// Fraction of the real pulses that is simulated. Slots are spread over
    /// the full duration; reported rates are scaled back up.
    pub time_scale: f64,
    pub output_dir: Option<PathBuf>,
    /// Write the per-slot photon sidecar.
    pub ground_truth: bool,
    pub source: SourceSection,
    pub receiver: ReceiverConfig,
    pub channel: ChannelSection,
    pub calibration: Option<CalibrationSection>,
    pub distill: DistillSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 1.0,
            time_scale: 1.0,
            output_dir: None,
            ground_truth: true,
            source: SourceSection::default(),
            receiver: ReceiverConfig::default(),
            channel: ChannelSection::default(),
            calibration: None,
            distill: DistillSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub mu: f64,
    pub rep_rate: f64,
    /// Built-in state table (`ideal`, `sender_output`,
    /// `receiver_uncompensated`, `receiver_compensated`) or a TOML file.
    pub states: String,
    /// Rescale every state to this degree of polarization.
    pub dop: Option<f64>,
    /// Unpolarized emission, photons per second.
    pub background_rate: f64,
    pub beacon_on: bool,
    pub pattern_length: usize,
    /// Seed of the bit pattern; derived from the run seed when absent.
    pub pattern_seed: Option<u64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            rep_rate: DEFAULT_REP_RATE,
            states: "ideal".into(),
            dop: None,
            background_rate: 0.0,
            beacon_on: true,
            pattern_length: DEFAULT_PATTERN_LENGTH,
            pattern_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Sender on its mount, `xi = 1` throughout.
    #[default]
    Static,
    /// Trace drawn from the jitter model.
    Handheld,
    /// Trace read from `channel.trace`.
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub mode: ChannelMode,
    pub trace: Option<PathBuf>,
    /// Put the optimized compensation plates in front of the analyzer.
    pub compensate: bool,
    pub jitter: JitterModel,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            mode: ChannelMode::Static,
            trace: None,
            compensate: false,
            jitter: JitterModel::default(),
        }
    }
}

/// Solve background and noise rates for a target static QBER. Overrides
/// `source.background_rate` and `receiver.dark_rate_per_detector`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub target_qber: f64,
    /// Part of the QBER caused by dark counts and beacon leakage.
    pub noise_error_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSection {
    pub bin_duration: f64,
    /// Raw rate of the aligned static link, the `xi = 1` reference.
    pub r_static_ref: f64,
    /// Preparation quality used in the rate formula.
    pub q: f64,
    pub f: f64,
    /// Fixed threshold; optimized when absent.
    pub xi_thr: Option<f64>,
}

impl Default for DistillSection {
    fn default() -> Self {
        Self {
            bin_duration: crate::channel::DEFAULT_BIN_DURATION,
            r_static_ref: STATIC_RAW_RATE,
            q: 0.75,
            f: DEFAULT_EC_EFFICIENCY,
            xi_thr: None,
        }
    }
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))
    }

    /// Parses and validates a config file; relative paths inside it are
    /// made absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(&path.display().to_string(), e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(trace) = &self.channel.trace {
            if trace.is_relative() {
                self.channel.trace = Some(base.join(trace));
            }
        }
        if preset_states(&self.source.states).is_none() && Path::new(&self.source.states).is_relative() {
            self.source.states = base.join(&self.source.states).display().to_string();
        }
        if let Some(dir) = &self.output_dir {
            if dir.is_relative() {
                self.output_dir = Some(base.join(dir));
            }
        }
    }

    /// Range checks on every key; errors name the key path.
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(config_err("duration", format!("{} must be >= 0", self.duration)));
        }
        if !(self.time_scale > 0.0 && self.time_scale <= 1.0) {
            return Err(config_err("time_scale", format!("{} must be in (0, 1]", self.time_scale)));
        }
        self.source_config().map(|_| ())?;
        if self.source.pattern_length == 0 {
            return Err(config_err("source.pattern_length", "must be > 0"));
        }
        if let Some(dop) = self.source.dop {
            if !(dop > 0.0 && dop <= 1.0) {
                return Err(config_err("source.dop", format!("{dop} must be in (0, 1]")));
            }
        }
        self.receiver
            .validate(self.source.rep_rate)
            .map_err(|e| config_err("receiver", e))?;
        match self.channel.mode {
            ChannelMode::Handheld => {
                self.channel
                    .jitter
                    .validate()
                    .map_err(|e| config_err("channel.jitter", e))?;
            }
            ChannelMode::Trace => match &self.channel.trace {
                None => return Err(config_err("channel.trace", "required in trace mode")),
                Some(p) if !p.is_file() => {
                    return Err(config_err("channel.trace", format!("{} does not exist", p.display())))
                }
                Some(_) => {}
            },
            ChannelMode::Static => {}
        }
        if let Some(c) = &self.calibration {
            if !(c.target_qber > 0.0 && c.target_qber < 0.5) {
                return Err(config_err(
                    "calibration.target_qber",
                    format!("{} must be in (0, 0.5)", c.target_qber),
                ));
            }
            if !(c.noise_error_share >= 0.0 && c.noise_error_share < c.target_qber) {
                return Err(config_err(
                    "calibration.noise_error_share",
                    format!("{} must be in [0, target_qber)", c.noise_error_share),
                ));
            }
        }
        let d = &self.distill;
        if !(d.bin_duration > 0.0) {
            return Err(config_err("distill.bin_duration", format!("{} must be > 0", d.bin_duration)));
        }
        if !(d.r_static_ref > 0.0) {
            return Err(config_err("distill.r_static_ref", format!("{} must be > 0", d.r_static_ref)));
        }
        if !(d.q >= 0.0) {
            return Err(config_err("distill.q", format!("{} must be >= 0", d.q)));
        }
        if !(d.f >= 1.0) {
            return Err(config_err("distill.f", format!("{} must be >= 1", d.f)));
        }
        if let Some(x) = d.xi_thr {
            if !(0.0..=1.0).contains(&x) {
                return Err(config_err("distill.xi_thr", format!("{x} must be in [0, 1]")));
            }
        }
        Ok(())
    }

    /// The prepared states after the optional DOP rescaling.
    pub fn states(&self) -> Result<PreparedStateSet, Error> {
        let key = "source.states";
        let set = match preset_states(&self.source.states) {
            Some(set) => set,
            None => {
                let path = Path::new(&self.source.states);
                if !path.is_file() {
                    return Err(config_err(
                        key,
                        format!("`{}` is neither a built-in table nor a file", self.source.states),
                    ));
                }
                PreparedStateSet::load(path).map_err(|e| config_err(key, e))?
            }
        };
        match self.source.dop {
            Some(dop) => set.with_dop(dop).map_err(|e| config_err("source.dop", e)),
            None => Ok(set),
        }
    }

    pub fn source_config(&self) -> Result<SourceConfig, Error> {
        let cfg = SourceConfig {
            mu: self.source.mu,
            rep_rate: self.source.rep_rate,
            states: self.states()?,
            background_rate: self.source.background_rate,
            beacon_on: self.source.beacon_on,
        };
        cfg.validate().map_err(|e| config_err("source", e))?;
        Ok(cfg)
    }

    /// Pulses actually simulated per second of run time.
    pub fn simulated_rep_rate(&self) -> f64 {
        self.source.rep_rate * self.time_scale
    }
}

fn preset_states(name: &str) -> Option<PreparedStateSet> {
    Some(match name {
        "ideal" => PreparedStateSet::ideal(),
        "sender_output" => PreparedStateSet::sender_output(),
        "receiver_uncompensated" => PreparedStateSet::receiver_uncompensated(),
        "receiver_compensated" => PreparedStateSet::receiver_compensated(),
        _ => return None,
    })
}
