//! Post-selection on the link efficiency of each time bin.
//!
//! Bins below the threshold are discarded; the survivors are evaluated
//! with the threshold transmission `xi_thr * T_Bob`, a lower bound on the
//! transmission they actually had.

use serde::{Deserialize, Serialize};

use super::gllp::{gllp_secret_rate, GllpParams};
use super::{BinCounts, BinStatistics, DistillError};

/// Thresholds scanned: `0, 1/N, ..., 1`.
pub const THRESHOLD_GRID_STEPS: usize = 100;

/// A bin below this efficiency marks the sender leaving its mount.
const LINK_DROP_LEVEL: f64 = 0.05;
/// First bin at or above this efficiency after the drop starts the link.
const LINK_ACQUIRE_LEVEL: f64 = 0.2;

/// Zeroes every bin whose efficiency estimate is below `xi_thr`.
pub fn threshold_filter(bins: &BinStatistics, xi_thr: f64) -> BinStatistics {
    BinStatistics {
        bins: bins
            .bins
            .iter()
            .map(|b| {
                if b.xi_estimate < xi_thr {
                    BinCounts::default()
                } else {
                    *b
                }
            })
            .collect(),
        bin_duration: bins.bin_duration,
    }
}

/// Rates after filtering, averaged over the full duration of `bins`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub xi_thr: f64,
    pub r_raw: f64,
    pub r_sift: f64,
    /// QBER of the surviving bins.
    pub qber: Option<f64>,
    /// Tagged fraction at the threshold transmission; `None` when it is
    /// at least one.
    pub delta: Option<f64>,
    pub r_sec: f64,
}

pub fn evaluate_threshold(bins: &BinStatistics, params: &GllpParams, xi_thr: f64) -> ThresholdPoint {
    let kept = threshold_filter(bins, xi_thr);
    let duration = bins.duration();
    let (r_raw, r_sift) = if duration > 0.0 {
        (
            kept.total_raw() as f64 / duration,
            kept.total_sifted() as f64 / duration,
        )
    } else {
        (0.0, 0.0)
    };
    let qber = kept.qber();
    let mut point = ThresholdPoint {
        xi_thr,
        r_raw,
        r_sift,
        qber,
        delta: None,
        r_sec: 0.0,
    };
    let transmission = (xi_thr * params.t_bob).min(1.0);
    let Some(e) = qber else { return point };
    if transmission <= 0.0 || e >= 0.5 {
        return point;
    }
    if let Ok(rate) = gllp_secret_rate(&params.inputs(r_sift, e, transmission)) {
        point.delta = Some(rate.delta);
        point.r_sec = rate.r_sec;
    }
    point
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub points: Vec<ThresholdPoint>,
    pub best: ThresholdPoint,
}

/// Grid search over `xi_thr` in steps of 0.01; ties go to the lowest
/// threshold.
pub fn optimize_threshold(
    bins: &BinStatistics,
    params: &GllpParams,
) -> Result<ThresholdScan, DistillError> {
    if bins.is_empty() {
        return Err(DistillError::InvalidInput("no bins to optimize over".into()));
    }
    let points: Vec<ThresholdPoint> = (0..=THRESHOLD_GRID_STEPS)
        .map(|i| evaluate_threshold(bins, params, i as f64 / THRESHOLD_GRID_STEPS as f64))
        .collect();
    let best = points
        .iter()
        .copied()
        .reduce(|best, p| if p.r_sec > best.r_sec { p } else { best })
        .expect("grid is non-empty");
    Ok(ThresholdScan { points, best })
}

/// Mean efficiency estimate from `link_start_bin` to the end.
pub fn link_efficiency(bins: &BinStatistics, link_start_bin: usize) -> Result<f64, DistillError> {
    if link_start_bin >= bins.len() {
        return Err(DistillError::InvalidInput(format!(
            "link start {link_start_bin} beyond {} bins",
            bins.len()
        )));
    }
    let tail = &bins.bins[link_start_bin..];
    Ok(tail.iter().map(|b| b.xi_estimate).sum::<f64>() / tail.len() as f64)
}

/// First bin of successful pointing: after the first dropout, the first
/// bin whose efficiency reaches 0.2. Zero when the link never drops out.
pub fn find_link_start(bins: &BinStatistics) -> usize {
    let Some(drop) = bins.bins.iter().position(|b| b.xi_estimate < LINK_DROP_LEVEL) else {
        return 0;
    };
    bins.bins[drop..]
        .iter()
        .position(|b| b.xi_estimate >= LINK_ACQUIRE_LEVEL)
        .map_or(bins.len(), |p| drop + p)
}
