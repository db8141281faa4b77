//! Asymptotic secret-key rate with tagged multi-photon pulses and an
//! imperfect preparation quality.

use serde::{Deserialize, Serialize};

use super::{DistillError, DEFAULT_EC_EFFICIENCY};

/// `H2(p) = -p log2 p - (1-p) log2 (1-p)`, zero at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Fraction of detections that may come from multi-photon pulses:
/// `(1 - (1 + μ) e^-μ) / (T η (1 - e^-μ))`.
pub fn tagged_fraction(mu: f64, transmission: f64, eta: f64) -> Result<f64, DistillError> {
    if !(mu > 0.0) || !(transmission * eta > 0.0) {
        return Err(DistillError::InvalidInput(format!(
            "tagged fraction needs mu > 0 and T*eta > 0 (mu={mu}, T={transmission}, eta={eta})"
        )));
    }
    // expm1 keeps precision for small mu
    let vacuum_complement = -(-mu).exp_m1();
    let multi = vacuum_complement - mu * (-mu).exp();
    let delta = multi / (transmission * eta * vacuum_complement);
    if delta >= 1.0 {
        return Err(DistillError::TaggedDominates { delta });
    }
    Ok(delta)
}

/// Inputs of the GLLP rate. `transmission` is the channel and receiver
/// transmission excluding the detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GllpInputs {
    /// Sifted key rate, bits per second.
    pub r_sift: f64,
    pub e: f64,
    pub mu: f64,
    pub transmission: f64,
    pub eta: f64,
    /// Preparation quality.
    pub q: f64,
    /// Error-correction inefficiency.
    pub f: f64,
}

impl GllpInputs {
    pub fn validate(&self) -> Result<(), DistillError> {
        let checks = [
            ("r_sift", self.r_sift >= 0.0),
            ("e", (0.0..0.5).contains(&self.e)),
            ("mu", self.mu > 0.0),
            ("transmission", self.transmission > 0.0 && self.transmission <= 1.0),
            ("eta", self.eta > 0.0 && self.eta <= 1.0),
            ("q", self.q >= 0.0),
            ("f", self.f >= 1.0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(DistillError::InvalidInput(format!("{name} out of range: {self:?}"))),
            None => Ok(()),
        }
    }
}

/// Fixed parameters of a link; the transmission follows from a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GllpParams {
    pub mu: f64,
    pub t_bob: f64,
    pub eta: f64,
    pub q: f64,
    pub f: f64,
}

impl Default for GllpParams {
    fn default() -> Self {
        Self {
            mu: crate::source::DEFAULT_MU,
            t_bob: crate::receiver::DEFAULT_T_BOB,
            eta: crate::receiver::DEFAULT_ETA,
            q: 0.75,
            f: DEFAULT_EC_EFFICIENCY,
        }
    }
}

impl GllpParams {
    pub fn inputs(&self, r_sift: f64, e: f64, transmission: f64) -> GllpInputs {
        GllpInputs {
            r_sift,
            e,
            mu: self.mu,
            transmission,
            eta: self.eta,
            q: self.q,
            f: self.f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GllpRate {
    /// Secret key rate, clamped at zero.
    pub r_sec: f64,
    pub delta: f64,
    /// Secret fraction per sifted bit before clamping.
    pub bracket: f64,
    /// `e / (1 - Δ) >= 1/2`: the single-photon phase error saturates and the
    /// rate is reported as zero.
    pub entropy_domain: bool,
}

/// `R_sec = R_sift [(1-Δ)(q - H2(e/(1-Δ))) - f H2(e)]`, clamped at zero.
pub fn gllp_secret_rate(inputs: &GllpInputs) -> Result<GllpRate, DistillError> {
    inputs.validate()?;
    let delta = tagged_fraction(inputs.mu, inputs.transmission, inputs.eta)?;
    let phase = inputs.e / (1.0 - delta);
    if phase >= 0.5 {
        return Ok(GllpRate {
            r_sec: 0.0,
            delta,
            bracket: f64::NEG_INFINITY,
            entropy_domain: true,
        });
    }
    let bracket =
        (1.0 - delta) * (inputs.q - binary_entropy(phase)) - inputs.f * binary_entropy(inputs.e);
    Ok(GllpRate {
        r_sec: (inputs.r_sift * bracket).max(0.0),
        delta,
        bracket,
        entropy_domain: false,
    })
}
