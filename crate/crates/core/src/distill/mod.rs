//! Classical post-processing: sifting, error estimation, time binning and
//! the asymptotic secret-key rates.

mod decoy;
mod gllp;
mod report;
mod threshold;

pub use decoy::{decoy_secret_rate, DecoyInputs, DecoyOptions, DecoyRate, DecoyStatus};
pub use gllp::{binary_entropy, gllp_secret_rate, tagged_fraction, GllpInputs, GllpParams, GllpRate};
pub use report::{write_bin_csv, RateReport};
pub use threshold::{
    evaluate_threshold, find_link_start, link_efficiency, optimize_threshold, threshold_filter,
    ThresholdPoint, ThresholdScan, THRESHOLD_GRID_STEPS,
};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::receiver::{slot_of_timestamp, DetectionRecord};
use crate::source::PatternBuffer;

/// Error-correction inefficiency used unless configured otherwise.
pub const DEFAULT_EC_EFFICIENCY: f64 = 1.22;
/// Fraction of detections kept after sifting with a passive 50:50 basis
/// choice.
pub const SIFT_FACTOR: f64 = 0.5;
/// Static-link raw detection rate used as the `xi = 1` reference, bps.
pub const STATIC_RAW_RATE: f64 = 649_500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistillError {
    #[error("sifted key is empty")]
    EmptyKey,
    #[error("tagged fraction {delta:.4} >= 1, no key can be distilled")]
    TaggedDominates { delta: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("record {index} is out of time order")]
    UnsortedRecords { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedBit {
    pub alice_bit: u8,
    pub bob_bit: u8,
    pub slot_index: u64,
    pub timestamp_ps: u64,
}

impl SiftedBit {
    pub fn is_error(&self) -> bool {
        self.alice_bit != self.bob_bit
    }
}

/// Basis-matched single-click slots with their provenance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SiftedKey {
    pub pairs: Vec<SiftedBit>,
    /// Slots holding at least one record.
    pub detected_slots: u64,
    /// Slots dropped because more than one detector fired.
    pub multi_click_slots: u64,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_error()).count()
    }
}

/// Maps records to slots, looks up the sender's symbol and keeps slots with
/// exactly one click in the matching basis.
pub fn sift(
    pattern: &PatternBuffer,
    records: &[DetectionRecord],
    rep_rate: f64,
) -> Result<SiftedKey, DistillError> {
    if let Some(i) = records
        .windows(2)
        .position(|w| w[1].timestamp_ps < w[0].timestamp_ps)
    {
        return Err(DistillError::UnsortedRecords { index: i + 1 });
    }
    let mut key = SiftedKey::default();
    let mut i = 0;
    while i < records.len() {
        let slot = slot_of_timestamp(records[i].timestamp_ps, rep_rate);
        let mut j = i + 1;
        while j < records.len() && slot_of_timestamp(records[j].timestamp_ps, rep_rate) == slot {
            j += 1;
        }
        key.detected_slots += 1;
        if j - i > 1 {
            key.multi_click_slots += 1;
        } else {
            let rec = records[i];
            let symbol = pattern.symbol(slot);
            if rec.channel.basis() == symbol.basis {
                key.pairs.push(SiftedBit {
                    alice_bit: symbol.bit,
                    bob_bit: rec.channel.bit(),
                    slot_index: slot,
                    timestamp_ps: rec.timestamp_ps,
                });
            }
        }
        i = j;
    }
    Ok(key)
}

/// Observed error fraction with an exact (Clopper-Pearson) 95 % interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub qber: f64,
    pub errors: u64,
    pub total: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl QberEstimate {
    pub fn from_counts(errors: u64, total: u64) -> Result<Self, DistillError> {
        if total == 0 {
            return Err(DistillError::EmptyKey);
        }
        if errors > total {
            return Err(DistillError::InvalidInput(format!(
                "{errors} errors in {total} bits"
            )));
        }
        let (ci_low, ci_high) = clopper_pearson(errors, total, 0.05);
        Ok(Self {
            qber: errors as f64 / total as f64,
            errors,
            total,
            ci_low,
            ci_high,
        })
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.ci_low..=self.ci_high).contains(&p)
    }
}

fn clopper_pearson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let low = if k == 0.0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shape")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if k == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Error fraction of the full sifted key, compared against the known
/// pattern.
pub fn estimate_qber(key: &SiftedKey) -> Result<QberEstimate, DistillError> {
    QberEstimate::from_counts(key.errors() as u64, key.len() as u64)
}

/// Error fraction of a random sample of the key, as a real protocol would
/// disclose it.
pub fn estimate_qber_sampled<R: Rng + ?Sized>(
    key: &SiftedKey,
    fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate, DistillError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DistillError::InvalidInput(format!("sample fraction {fraction}")));
    }
    if key.is_empty() {
        return Err(DistillError::EmptyKey);
    }
    let amount = ((key.len() as f64 * fraction).round() as usize).clamp(1, key.len());
    let errors = sample(rng, key.len(), amount)
        .iter()
        .filter(|&i| key.pairs[i].is_error())
        .count();
    QberEstimate::from_counts(errors as u64, amount as u64)
}

/// Counts in one time bin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinCounts {
    pub raw_count: u64,
    pub sifted_count: u64,
    pub error_count: u64,
    pub xi_estimate: f64,
}

impl BinCounts {
    pub fn qber(&self) -> Option<f64> {
        (self.sifted_count > 0).then(|| self.error_count as f64 / self.sifted_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStatistics {
    pub bins: Vec<BinCounts>,
    pub bin_duration: f64,
}

impl BinStatistics {
    pub fn new(bins: Vec<BinCounts>, bin_duration: f64) -> Result<Self, DistillError> {
        if !(bin_duration > 0.0) {
            return Err(DistillError::InvalidInput(format!("bin_duration {bin_duration}")));
        }
        for (k, b) in bins.iter().enumerate() {
            if b.error_count > b.sifted_count || b.sifted_count > b.raw_count || !(b.xi_estimate >= 0.0) {
                return Err(DistillError::InvalidInput(format!("bin {k}: inconsistent counts {b:?}")));
            }
        }
        Ok(Self { bins, bin_duration })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.bins.len() as f64 * self.bin_duration
    }

    pub fn total_raw(&self) -> u64 {
        self.bins.iter().map(|b| b.raw_count).sum()
    }

    pub fn total_sifted(&self) -> u64 {
        self.bins.iter().map(|b| b.sifted_count).sum()
    }

    pub fn total_errors(&self) -> u64 {
        self.bins.iter().map(|b| b.error_count).sum()
    }

    pub fn qber(&self) -> Option<f64> {
        let sifted = self.total_sifted();
        (sifted > 0).then(|| self.total_errors() as f64 / sifted as f64)
    }

    /// Bins from `start` to the end.
    pub fn tail(&self, start: usize) -> Self {
        Self {
            bins: self.bins[start.min(self.bins.len())..].to_vec(),
            bin_duration: self.bin_duration,
        }
    }
}

/// Per-bin counts; `xi_estimate` is the bin's raw rate relative to
/// `r_static_ref`, capped at one. `n_bins` fixes the number of bins;
/// otherwise it ends with the last record.
pub fn bin_statistics(
    key: &SiftedKey,
    records: &[DetectionRecord],
    bin_duration: f64,
    n_bins: Option<usize>,
    r_static_ref: f64,
) -> Result<BinStatistics, DistillError> {
    if !(r_static_ref > 0.0) {
        return Err(DistillError::InvalidInput(format!("r_static_ref {r_static_ref}")));
    }
    if !(bin_duration > 0.0) {
        return Err(DistillError::InvalidInput(format!("bin_duration {bin_duration}")));
    }
    let bin_ps = bin_duration * 1e12;
    let bin_of = |ts: u64| (ts as f64 / bin_ps) as usize;
    let n = n_bins.unwrap_or_else(|| records.last().map_or(0, |r| bin_of(r.timestamp_ps) + 1));
    let mut bins = vec![BinCounts::default(); n];
    for r in records {
        if let Some(b) = bins.get_mut(bin_of(r.timestamp_ps)) {
            b.raw_count += 1;
        }
    }
    for p in &key.pairs {
        if let Some(b) = bins.get_mut(bin_of(p.timestamp_ps)) {
            b.sifted_count += 1;
            b.error_count += u64::from(p.is_error());
        }
    }
    for b in &mut bins {
        b.xi_estimate = (b.raw_count as f64 / bin_duration / r_static_ref).min(1.0);
    }
    BinStatistics::new(bins, bin_duration)
}
