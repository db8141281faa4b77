//! End-to-end runs: configuration, simulation, distillation and the
//! recomputation of published rate tables. The `hhqkd` binary is a thin
//! wrapper around the `cmd_*` functions here.

mod config;
mod decoy_sim;
mod reproduce;

pub use config::{
    CalibrationSection, ChannelMode, ChannelSection, DistillSection, ScenarioConfig, SourceSection,
};
pub use decoy_sim::{simulate_decoy, DecoySimConfig, DecoySimResult};
pub use reproduce::{format_reproduction, reproduce, HandheldRow, ReproRow, Table, HANDHELD_TABLE};

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    load_link_trace, sensor_stream_from_trace, simulate_link_trace, LinkTrace, DEFAULT_BIN_DURATION,
};
use crate::distill::{
    bin_statistics, decoy_secret_rate, evaluate_threshold, find_link_start, link_efficiency,
    optimize_threshold, sift, write_bin_csv, BinStatistics, DecoyInputs, DecoyOptions, DecoyRate,
    DistillError, GllpParams, RateReport, ThresholdPoint, ThresholdScan, DEFAULT_EC_EFFICIENCY,
    SIFT_FACTOR, STATIC_RAW_RATE,
};
use crate::polarization::{intrinsic_qber, optimize_compensation, BbState, PreparedStateSet, RetarderSetting};
use crate::receiver::{
    frame_correction_angle, frame_correction_stack, load_records, noise_rate_for_error_share,
    read_records_csv, save_records, DetectionRecord, Receiver, ReceiverConfig,
};
use crate::source::{
    block_rng, build_pattern, Emitter, PatternBuffer, DEFAULT_MU, DEFAULT_REP_RATE, SLOT_BLOCK,
};
use crate::Error;

pub const RECORDS_FILE: &str = "records.bin";
pub const PATTERN_FILE: &str = "pattern.bin";
pub const TRACE_FILE: &str = "trace.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const REPORT_FILE: &str = "report.json";
pub const BINS_FILE: &str = "bins.csv";
pub const SCAN_FILE: &str = "threshold_scan.csv";

// Keep the trace and pattern streams apart from the per-block slot streams.
const TRACE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const PATTERN_SEED_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;

/// Background and noise rates that put a static link at a given QBER.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Unpolarized source emission, photons per second.
    pub background_rate: f64,
    pub dark_rate_per_detector: f64,
    /// Probability per slot of a signal detection.
    pub signal_per_slot: f64,
    pub intrinsic_qber: f64,
}

/// Closed-form calibration of a static link.
///
/// With signal detections `S` per slot at intrinsic error `e_int` and
/// random clicks (background `B`, noise `D`) at error 1/2, the QBER is
/// `(S e_int + (B + D)/2) / (S + B + D)`. The noise part is fixed by
/// `noise_share`, the background makes up the rest.
pub fn calibrate_static(
    states: &PreparedStateSet,
    mu: f64,
    rep_rate: f64,
    receiver: &ReceiverConfig,
    target_qber: f64,
    noise_share: f64,
) -> Result<Calibration, Error> {
    let e_int = intrinsic_qber(states);
    if e_int >= target_qber {
        return Err(Error::Config(format!(
            "calibration.target_qber: {target_qber} is below the intrinsic error {e_int:.5} of the states"
        )));
    }
    let survive = receiver.t_bob * receiver.eta;
    let s = -(-mu * survive).exp_m1();
    let total = s * (0.5 - e_int) / (0.5 - target_qber);
    let noise = 2.0 * noise_share * total;
    let background = total - s - noise;
    if background < 0.0 {
        return Err(Error::Config(format!(
            "calibration.noise_error_share: {noise_share} alone exceeds the error budget"
        )));
    }
    let noise_rate = noise_rate_for_error_share(noise_share, s + background, receiver.window);
    let dark = noise_rate - receiver.beacon_leak_rate;
    if dark < 0.0 {
        return Err(Error::Config(format!(
            "receiver.beacon_leak_rate: {} exceeds the calibrated noise rate {noise_rate}",
            receiver.beacon_leak_rate
        )));
    }
    let photons_per_slot = -(-background).ln_1p() / survive;
    Ok(Calibration {
        background_rate: photons_per_slot * rep_rate,
        dark_rate_per_detector: dark,
        signal_per_slot: s,
        intrinsic_qber: e_int,
    })
}

/// Run parameters needed to interpret the output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunMetadata {
    pub seed: u64,
    /// Real repetition rate, pulses per second.
    pub rep_rate: f64,
    pub time_scale: f64,
    pub duration: f64,
    pub slots: u64,
    pub bin_duration: f64,
    pub r_static_ref: f64,
    pub mu: f64,
    pub t_bob: f64,
    pub eta: f64,
    pub q: f64,
    pub f: f64,
    pub xi_thr: Option<f64>,
    pub background_rate: f64,
    pub dark_rate_per_detector: f64,
    pub channel_mode: ChannelMode,
    pub compensation_residual: Option<f64>,
}

impl Default for RunMetadata {
    fn default() -> Self {
        Self {
            seed: 0,
            rep_rate: DEFAULT_REP_RATE,
            time_scale: 1.0,
            duration: 0.0,
            slots: 0,
            bin_duration: DEFAULT_BIN_DURATION,
            r_static_ref: STATIC_RAW_RATE,
            mu: DEFAULT_MU,
            t_bob: crate::receiver::DEFAULT_T_BOB,
            eta: crate::receiver::DEFAULT_ETA,
            q: 0.75,
            f: DEFAULT_EC_EFFICIENCY,
            xi_thr: None,
            background_rate: 0.0,
            dark_rate_per_detector: 0.0,
            channel_mode: ChannelMode::Static,
            compensation_residual: None,
        }
    }
}

impl RunMetadata {
    pub fn simulated_rep_rate(&self) -> f64 {
        self.rep_rate * self.time_scale
    }

    pub fn gllp_params(&self) -> GllpParams {
        GllpParams {
            mu: self.mu,
            t_bob: self.t_bob,
            eta: self.eta,
            q: self.q,
            f: self.f,
        }
    }
}

/// Photons sent in one slot, kept for slots with at least one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub slot_index: u64,
    pub state: BbState,
    pub photons: u32,
    pub background_photons: u32,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub records: Vec<DetectionRecord>,
    pub pattern: PatternBuffer,
    pub trace: LinkTrace,
    pub ground_truth: Vec<GroundTruthRow>,
    pub metadata: RunMetadata,
}

/// Optics seen by the slots of one trace bin.
struct BinOptics {
    xi: f64,
    roll: f64,
    correction: Vec<RetarderSetting>,
}

/// Runs the full physical simulation described by `cfg`.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimulationOutput, Error> {
    cfg.validate()?;
    let mut source = cfg.source_config()?;
    let mut receiver = cfg.receiver.clone();
    if let Some(cal) = &cfg.calibration {
        let c = calibrate_static(
            &source.states,
            source.mu,
            source.rep_rate,
            &receiver,
            cal.target_qber,
            cal.noise_error_share,
        )?;
        source.background_rate = c.background_rate;
        receiver.dark_rate_per_detector = c.dark_rate_per_detector;
    }

    let pattern_seed = cfg.source.pattern_seed.unwrap_or(cfg.seed ^ PATTERN_SEED_SALT);
    let pattern = build_pattern(pattern_seed, cfg.source.pattern_length)?;
    let trace = build_trace(cfg)?;

    let compensation = if cfg.channel.compensate {
        Some(optimize_compensation(&source.states)?)
    } else {
        None
    };
    let sensor = sensor_stream_from_trace(&trace);
    let optics: Vec<BinOptics> = (0..trace.len())
        .map(|k| {
            let t = k as f64 * trace.bin_duration;
            let angle = frame_correction_angle(&sensor, t, receiver.hwp_lag);
            let mut correction = frame_correction_stack(angle).to_vec();
            if let Some(c) = &compensation {
                correction.extend_from_slice(&c.stack);
            }
            BinOptics {
                xi: trace.xi[k],
                roll: 2.0 * trace.theta_deg[k].to_radians(),
                correction,
            }
        })
        .collect();

    let rep_eff = cfg.simulated_rep_rate();
    let slots = (cfg.duration * rep_eff).round() as u64;
    let rx = Receiver::new(receiver.clone(), rep_eff)?;
    let emitter = Emitter::new(&pattern, &source)?;
    let blocks = slots.div_ceil(SLOT_BLOCK);
    let keep_truth = cfg.ground_truth;
    let parts: Vec<(Vec<DetectionRecord>, Vec<GroundTruthRow>)> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(cfg.seed, block);
            let mut records = Vec::new();
            let mut truth = Vec::new();
            let first = block * SLOT_BLOCK;
            let last = (first + SLOT_BLOCK).min(slots);
            for slot in first..last {
                let emission = emitter.emit(slot, &mut rng);
                let bin = ((slot as f64 / rep_eff) / trace.bin_duration) as usize;
                if keep_truth {
                    let bg = emission.background.map_or(0, |b| b.photon_count);
                    if emission.signal.photon_count + bg > 0 {
                        truth.push(GroundTruthRow {
                            slot_index: slot,
                            state: emission.signal.state_label,
                            photons: emission.signal.photon_count,
                            background_photons: bg,
                        });
                    }
                }
                let (xi, roll, correction) = match optics.get(bin) {
                    Some(o) => (o.xi, o.roll, o.correction.as_slice()),
                    None => (0.0, 0.0, &[][..]),
                };
                rx.detect_into(&emission, xi, roll, correction, &mut rng, &mut records);
            }
            (records, truth)
        })
        .collect();
    let mut records = Vec::new();
    let mut ground_truth = Vec::new();
    for (r, t) in parts {
        records.extend(r);
        ground_truth.extend(t);
    }

    let metadata = RunMetadata {
        seed: cfg.seed,
        rep_rate: source.rep_rate,
        time_scale: cfg.time_scale,
        duration: cfg.duration,
        slots,
        bin_duration: cfg.distill.bin_duration,
        r_static_ref: cfg.distill.r_static_ref,
        mu: source.mu,
        t_bob: receiver.t_bob,
        eta: receiver.eta,
        q: cfg.distill.q,
        f: cfg.distill.f,
        xi_thr: cfg.distill.xi_thr,
        background_rate: source.background_rate,
        dark_rate_per_detector: receiver.dark_rate_per_detector,
        channel_mode: cfg.channel.mode,
        compensation_residual: compensation.map(|c| c.residual_qber),
    };
    Ok(SimulationOutput {
        records,
        pattern,
        trace,
        ground_truth,
        metadata,
    })
}

fn build_trace(cfg: &ScenarioConfig) -> Result<LinkTrace, Error> {
    Ok(match cfg.channel.mode {
        ChannelMode::Static => LinkTrace::static_link(cfg.duration, DEFAULT_BIN_DURATION),
        ChannelMode::Handheld if cfg.duration == 0.0 => LinkTrace::static_link(0.0, DEFAULT_BIN_DURATION),
        ChannelMode::Handheld => {
            simulate_link_trace(&cfg.channel.jitter, cfg.duration, cfg.seed ^ TRACE_SEED_SALT)?
        }
        ChannelMode::Trace => {
            let path = cfg.channel.trace.as_ref().expect("validated");
            load_link_trace(path).map_err(|e| Error::Config(format!("channel.trace: {e}")))?
        }
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Error> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

/// `slot_index,state,photons,background_photons`
pub fn write_ground_truth(mut w: impl Write, rows: &[GroundTruthRow]) -> std::io::Result<()> {
    writeln!(w, "slot_index,state,photons,background_photons")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.slot_index, r.state.name(), r.photons, r.background_photons)?;
    }
    Ok(())
}

impl SimulationOutput {
    /// Writes records, pattern, trace, metadata and (when present) the
    /// ground-truth sidecar into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_records(dir.join(RECORDS_FILE), &self.records)?;
        self.pattern.save(dir.join(PATTERN_FILE))?;
        self.trace.save(dir.join(TRACE_FILE))?;
        let truth_path = dir.join(GROUND_TRUTH_FILE);
        let mut w = create(&truth_path)?;
        write_ground_truth(&mut w, &self.ground_truth)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&truth_path, e))?;
        let meta_path = dir.join(METADATA_FILE);
        let json = serde_json::to_string_pretty(&self.metadata).expect("metadata serializes");
        fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }
}

/// `simulate --config <path> --seed <n> --out <dir>`
pub fn cmd_simulate(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<SimulationOutput, Error> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let dir: PathBuf = match (out, &cfg.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(Error::Config("output_dir: no output directory given".into())),
    };
    let output = simulate(&cfg)?;
    output.write_to_dir(&dir)?;
    Ok(output)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Optimize,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillOptions {
    pub metadata: RunMetadata,
    pub threshold: ThresholdMode,
    pub decoy: Option<DecoyInputs>,
    /// Use the preparation quality in the decoy single-photon term.
    pub decoy_with_q: bool,
}

impl DistillOptions {
    pub fn new(metadata: RunMetadata) -> Self {
        let threshold = metadata.xi_thr.map_or(ThresholdMode::Optimize, ThresholdMode::Fixed);
        Self {
            metadata,
            threshold,
            decoy: None,
            decoy_with_q: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillOutcome {
    pub report: RateReport,
    /// All bins of the run.
    pub bins: BinStatistics,
    pub link_start_bin: usize,
    /// Threshold grid over the link period, rates in bps.
    pub scan: Option<ThresholdScan>,
    pub sifted_bits: usize,
    pub decoy: Option<DecoyRate>,
}

/// Sifting, binning, threshold selection and rate evaluation.
///
/// Rates are evaluated from the first bin of successful pointing to the
/// end of the run and extrapolated to the real repetition rate.
pub fn distill_records(
    records: &[DetectionRecord],
    pattern: &PatternBuffer,
    opts: &DistillOptions,
) -> Result<DistillOutcome, Error> {
    let meta = &opts.metadata;
    let key = sift(pattern, records, meta.simulated_rep_rate())?;
    if key.is_empty() {
        return Err(DistillError::EmptyKey.into());
    }
    let n_bins = (meta.duration > 0.0).then(|| (meta.duration / meta.bin_duration - 1e-9).ceil() as usize);
    let bins = bin_statistics(
        &key,
        records,
        meta.bin_duration,
        n_bins,
        meta.r_static_ref * meta.time_scale,
    )?;
    let mut start = find_link_start(&bins);
    if start >= bins.len() {
        // never re-acquired; evaluate the whole run
        start = 0;
    }
    let xi_link = link_efficiency(&bins, start)?;
    let link = bins.tail(start);
    let params = meta.gllp_params();
    let scale = 1.0 / meta.time_scale;
    let rescale = |p: ThresholdPoint| ThresholdPoint {
        r_raw: p.r_raw * scale,
        r_sift: p.r_sift * scale,
        r_sec: p.r_sec * scale,
        ..p
    };
    let (best, scan) = match opts.threshold {
        ThresholdMode::Optimize => {
            let scan = optimize_threshold(&link, &params)?;
            let scan = ThresholdScan {
                points: scan.points.into_iter().map(rescale).collect(),
                best: rescale(scan.best),
            };
            (scan.best, Some(scan))
        }
        ThresholdMode::Fixed(x) => {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Config(format!("xi_thr: {x} must be in [0, 1]")));
            }
            (rescale(evaluate_threshold(&link, &params, x)), None)
        }
    };
    let decoy = match &opts.decoy {
        Some(inputs) => Some(decoy_secret_rate(
            inputs,
            &DecoyOptions {
                rep_rate: meta.rep_rate,
                sift_factor: SIFT_FACTOR,
                preparation_quality: opts.decoy_with_q.then_some(meta.q),
            },
        )?),
        None => None,
    };
    let report = RateReport {
        r_raw: best.r_raw,
        r_sift: best.r_sift,
        qber: best.qber.or(link.qber()).unwrap_or(0.0),
        delta: best.delta,
        xi_link,
        xi_thr: best.xi_thr,
        r_sec_gllp: best.r_sec,
        r_sec_decoy: decoy.map(|d| d.rate),
    };
    Ok(DistillOutcome {
        report,
        bins,
        link_start_bin: start,
        scan,
        sifted_bits: key.len(),
        decoy,
    })
}

/// Reads `metadata.json` next to the records; defaults when it is absent.
pub fn load_metadata_near(records_path: &Path) -> Result<RunMetadata, Error> {
    let path = records_path.with_file_name(METADATA_FILE);
    if !path.is_file() {
        return Ok(RunMetadata::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Binary records, or CSV when the file name ends in `.csv`.
pub fn load_records_any(path: &Path) -> Result<Vec<DetectionRecord>, Error> {
    if path.extension().is_some_and(|e| e == "csv") {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(read_records_csv(std::io::BufReader::new(f))?)
    } else {
        Ok(load_records(path)?)
    }
}

/// `distill --records <path> --pattern <path> [--xi-thr <v>|--optimize]
/// [--decoy <gains-file>] --out <dir>`
pub fn cmd_distill(
    records_path: &Path,
    pattern_path: &Path,
    threshold: Option<ThresholdMode>,
    decoy_path: Option<&Path>,
    out: &Path,
) -> Result<DistillOutcome, Error> {
    let metadata = load_metadata_near(records_path)?;
    let mut opts = DistillOptions::new(metadata);
    if let Some(t) = threshold {
        opts.threshold = t;
    }
    if let Some(p) = decoy_path {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let inputs: DecoyInputs = serde_json::from_str(&text)
            .map_err(|e| DistillError::InvalidInput(format!("{}: {e}", p.display())))?;
        opts.decoy = Some(inputs);
    }
    let records = load_records_any(records_path)?;
    let pattern = PatternBuffer::load(pattern_path)?;
    let outcome = distill_records(&records, &pattern, &opts)?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let report_path = out.join(REPORT_FILE);
    fs::write(&report_path, outcome.report.to_json() + "\n").map_err(|e| Error::io(&report_path, e))?;
    let bins_path = out.join(BINS_FILE);
    let mut w = create(&bins_path)?;
    write_bin_csv(&mut w, &outcome.bins, 1.0 / opts.metadata.time_scale)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&bins_path, e))?;
    if let Some(scan) = &outcome.scan {
        let scan_path = out.join(SCAN_FILE);
        let mut w = create(&scan_path)?;
        write_scan_csv(&mut w, scan)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&scan_path, e))?;
    }
    Ok(outcome)
}

/// `xi_thr,r_raw,r_sift,qber,r_sec`
pub fn write_scan_csv(mut w: impl Write, scan: &ThresholdScan) -> std::io::Result<()> {
    writeln!(w, "xi_thr,r_raw,r_sift,qber,r_sec")?;
    for p in &scan.points {
        let qber = p.qber.map(|q| q.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{qber},{}", p.xi_thr, p.r_raw, p.r_sift, p.r_sec)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_config(duration: f64) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(&format!(
            r#"
            seed = 11
            duration = {duration}
            [source]
            states = "receiver_compensated"
            dop = 0.99
            [calibration]
            target_qber = 0.021
            noise_error_share = 0.00075
            "#
        ))
        .unwrap()
    }

    #[test]
    fn calibration_hits_target_analytically() {
        let states = PreparedStateSet::receiver_compensated().with_dop(0.99).unwrap();
        let rx = ReceiverConfig::default();
        let c = calibrate_static(&states, 0.042, 1e8, &rx, 0.021, 0.00075).unwrap();
        let survive = rx.t_bob * rx.eta;
        let b = -(-(c.background_rate / 1e8) * survive).exp_m1();
        let d = 4.0 * -(-c.dark_rate_per_detector * rx.window).exp_m1();
        let qber = (c.signal_per_slot * c.intrinsic_qber + (b + d) / 2.0) / (c.signal_per_slot + b + d);
        assert!((qber - 0.021).abs() < 1e-9, "{qber}");
        assert!(((d / 2.0) / (c.signal_per_slot + b + d) - 0.00075).abs() < 1e-9);
    }

    #[test]
    fn calibration_rejects_impossible_targets() {
        let states = PreparedStateSet::receiver_uncompensated();
        let rx = ReceiverConfig::default();
        assert!(calibrate_static(&states, 0.042, 1e8, &rx, 0.01, 0.0).is_err());
    }

    #[test]
    fn zero_duration_gives_empty_run() {
        let out = simulate(&static_config(0.0)).unwrap();
        assert!(out.records.is_empty());
        assert!(out.ground_truth.is_empty());
        assert_eq!(out.metadata.slots, 0);
    }

    #[test]
    fn static_run_rate_and_determinism() {
        let cfg = static_config(0.002);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.metadata.slots, 200_000);
        let rate = a.records.len() as f64 / 0.002;
        assert!((rate - 649_500.0).abs() < 0.1 * 649_500.0, "{rate}");
    }

    #[test]
    fn time_scaling_preserves_rate() {
        let mut cfg = static_config(0.2);
        cfg.time_scale = 0.01;
        let out = simulate(&cfg).unwrap();
        assert_eq!(out.metadata.slots, 200_000);
        let rate = out.records.len() as f64 / 0.2 / 0.01;
        assert!((rate - 649_500.0).abs() < 0.1 * 649_500.0, "{rate}");
        // timestamps cover the whole run
        let last = out.records.last().unwrap().timestamp_ps as f64 * 1e-12;
        assert!(last > 0.19 && last < 0.2, "{last}");
    }

    #[test]
    fn distill_static_run() {
        let out = simulate(&static_config(0.05)).unwrap();
        let opts = DistillOptions::new(out.metadata.clone());
        let d = distill_records(&out.records, &out.pattern, &opts).unwrap();
        assert_eq!(d.link_start_bin, 0);
        assert!((d.report.qber - 0.021).abs() < 0.005, "{}", d.report.qber);
        assert!(d.report.r_sec_gllp > 0.0);
        assert!(d.report.r_sec_decoy.is_none());
    }

    #[test]
    fn distill_of_empty_run_is_a_data_error() {
        let out = simulate(&static_config(0.0)).unwrap();
        let err = distill_records(&out.records, &out.pattern, &DistillOptions::new(out.metadata.clone()))
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
