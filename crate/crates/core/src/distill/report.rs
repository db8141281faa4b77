use std::io::Write;

use serde::{Deserialize, Serialize};

use super::BinStatistics;

/// Summary figures of one distillation run. Rates in bits per second,
/// extrapolated to the real repetition rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r_raw: f64,
    pub r_sift: f64,
    pub qber: f64,
    pub delta: Option<f64>,
    pub xi_link: f64,
    pub xi_thr: f64,
    pub r_sec_gllp: f64,
    pub r_sec_decoy: Option<f64>,
}

impl RateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Per-bin CSV `bin_index,r_raw,xi,qber`; `r_raw` is scaled by `rate_scale`
/// and `qber` is left empty for bins without sifted bits.
pub fn write_bin_csv(mut w: impl Write, bins: &BinStatistics, rate_scale: f64) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("bin_index,r_raw,xi,qber\n");
    for (k, b) in bins.bins.iter().enumerate() {
        let r_raw = b.raw_count as f64 / bins.bin_duration * rate_scale;
        let qber = b.qber().map(|q| q.to_string()).unwrap_or_default();
        writeln!(out, "{k},{r_raw},{},{qber}", b.xi_estimate).unwrap();
    }
    w.write_all(out.as_bytes())
}
