//! Stokes-vector algebra for the four BB84 polarization states.
//!
//! Polarization states are points on or inside the Poincaré sphere. Pure
//! states have unit norm; the norm is the degree of polarization (DOP).
//!
//! Sign conventions used throughout the crate:
//!
//! * `s1 = +1` is horizontal (H), `s2 = +1` is +45°, `s3 = +1` is
//!   right-circular (R).
//! * A retarder with retardance `δ` and fast axis at laboratory angle `φ`
//!   rotates the Stokes vector by `+δ` (right-hand rule) about the axis
//!   `(cos 2φ, sin 2φ, 0)`. With this convention a quarter-wave plate with
//!   a horizontal fast axis maps +45° to R.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical slack allowed above unit norm.
pub const STOKES_EPS: f64 = 1e-9;

/// Below this DOP a state has no usable direction.
pub const MIN_DOP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarizationError {
    #[error("intensity pair {pair} sums to zero")]
    ZeroIntensityPair { pair: &'static str },
    #[error("negative or non-finite intensity {value} in pair {pair}")]
    InvalidIntensity { pair: &'static str, value: f64 },
    #[error("Stokes vector norm {norm} exceeds 1")]
    InvalidState { norm: f64 },
    #[error("state has degree of polarization {dop:.3e}, too small to define a direction")]
    DegenerateState { dop: f64 },
    #[error("retardance {0} outside (0, 2π)")]
    InvalidRetardance(f64),
    #[error("state set file: {0}")]
    Format(String),
    #[error("state set file: {0}")]
    Io(String),
}

/// A polarization state `(s1, s2, s3)` with norm at most one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub const H: Self = Self::raw(1.0, 0.0, 0.0);
    pub const V: Self = Self::raw(-1.0, 0.0, 0.0);
    pub const P45: Self = Self::raw(0.0, 1.0, 0.0);
    pub const M45: Self = Self::raw(0.0, -1.0, 0.0);
    pub const R: Self = Self::raw(0.0, 0.0, 1.0);
    pub const L: Self = Self::raw(0.0, 0.0, -1.0);
    pub const UNPOLARIZED: Self = Self::raw(0.0, 0.0, 0.0);

    /// Builds a vector, rejecting anything outside the Poincaré ball.
    pub fn new(s1: f64, s2: f64, s3: f64) -> Result<Self, PolarizationError> {
        let v = Self::raw(s1, s2, s3);
        let norm = v.norm();
        if !norm.is_finite() || norm > 1.0 + STOKES_EPS {
            return Err(PolarizationError::InvalidState { norm });
        }
        Ok(v)
    }

    /// No validation. Callers guarantee the norm bound.
    pub const fn raw(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::raw(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3
    }

    pub fn cross(self, o: Self) -> Self {
        Self::raw(
            self.s2 * o.s3 - self.s3 * o.s2,
            self.s3 * o.s1 - self.s1 * o.s3,
            self.s1 * o.s2 - self.s2 * o.s1,
        )
    }

    pub fn scale(self, k: f64) -> Self {
        Self::raw(self.s1 * k, self.s2 * k, self.s3 * k)
    }

    pub fn add(self, o: Self) -> Self {
        Self::raw(self.s1 + o.s1, self.s2 + o.s2, self.s3 + o.s3)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::raw(self.s1 - o.s1, self.s2 - o.s2, self.s3 - o.s3)
    }

    pub fn distance(self, o: Self) -> f64 {
        self.sub(o).norm()
    }

    /// Direction of the state, i.e. the pure state it is a mixture of.
    pub fn unit(self) -> Result<Self, PolarizationError> {
        let dop = self.norm();
        if dop < MIN_DOP {
            return Err(PolarizationError::DegenerateState { dop });
        }
        Ok(self.scale(1.0 / dop))
    }

    /// Same direction, new degree of polarization.
    pub fn with_dop(self, dop: f64) -> Result<Self, PolarizationError> {
        if !(0.0..=1.0 + STOKES_EPS).contains(&dop) {
            return Err(PolarizationError::InvalidState { norm: dop });
        }
        Ok(self.unit()?.scale(dop))
    }

    pub fn degree_of_polarization(self) -> Result<f64, PolarizationError> {
        degree_of_polarization(self)
    }
}

impl fmt::Display for StokesVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.s1, self.s2, self.s3)
    }
}

fn normalized_difference(
    pair: &'static str,
    plus: f64,
    minus: f64,
) -> Result<f64, PolarizationError> {
    for value in [plus, minus] {
        if !value.is_finite() || value < 0.0 {
            return Err(PolarizationError::InvalidIntensity { pair, value });
        }
    }
    let sum = plus + minus;
    if sum <= 0.0 {
        return Err(PolarizationError::ZeroIntensityPair { pair });
    }
    Ok((plus - minus) / sum)
}

/// Reconstructs a Stokes vector from intensities measured in the H/V,
/// ±45° and R/L bases.
pub fn stokes_from_intensities(
    i_h: f64,
    i_v: f64,
    i_p45: f64,
    i_m45: f64,
    i_r: f64,
    i_l: f64,
) -> Result<StokesVector, PolarizationError> {
    let s1 = normalized_difference("H/V", i_h, i_v)?;
    let s2 = normalized_difference("+45/-45", i_p45, i_m45)?;
    let s3 = normalized_difference("R/L", i_r, i_l)?;
    StokesVector::new(s1, s2, s3)
}

/// Norm of the Stokes vector, clamped to one inside the numerical slack.
pub fn degree_of_polarization(v: StokesVector) -> Result<f64, PolarizationError> {
    let norm = v.norm();
    if !norm.is_finite() || norm > 1.0 + STOKES_EPS {
        return Err(PolarizationError::InvalidState { norm });
    }
    Ok(norm.min(1.0))
}

/// Squared overlap `|<a|b>|^2` of the pure states along `a` and `b`.
pub fn state_fidelity(a: StokesVector, b: StokesVector) -> Result<f64, PolarizationError> {
    let a = a.unit()?;
    let b = b.unit()?;
    Ok(((1.0 + a.dot(b)) / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    /// H/V
    Z,
    /// ±45°
    X,
}

/// Labels of the four BB84 states. Also used as detector channel labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BbState {
    H,
    V,
    P45,
    M45,
}

impl BbState {
    pub const ALL: [BbState; 4] = [BbState::H, BbState::V, BbState::P45, BbState::M45];

    /// Bit/basis mapping: (0,Z)=H, (1,Z)=V, (0,X)=+45, (1,X)=-45.
    pub fn from_symbol(bit: u8, basis: Basis) -> Self {
        match (bit & 1, basis) {
            (0, Basis::Z) => BbState::H,
            (_, Basis::Z) => BbState::V,
            (0, Basis::X) => BbState::P45,
            (_, Basis::X) => BbState::M45,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            BbState::H | BbState::V => Basis::Z,
            BbState::P45 | BbState::M45 => Basis::X,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            BbState::H | BbState::P45 => 0,
            BbState::V | BbState::M45 => 1,
        }
    }

    /// The ideal pure state, which is also the analyzer axis of the
    /// detector carrying this label.
    pub fn ideal(self) -> StokesVector {
        match self {
            BbState::H => StokesVector::H,
            BbState::V => StokesVector::V,
            BbState::P45 => StokesVector::P45,
            BbState::M45 => StokesVector::M45,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BbState::H => "H",
            BbState::V => "V",
            BbState::P45 => "P45",
            BbState::M45 => "M45",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for BbState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four BB84 states as emitted or as measured somewhere in the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedStateSet {
    states: [StokesVector; 4],
    pub label: String,
}

impl PreparedStateSet {
    pub fn new(
        label: impl Into<String>,
        h: StokesVector,
        v: StokesVector,
        p45: StokesVector,
        m45: StokesVector,
    ) -> Result<Self, PolarizationError> {
        let states = [h, v, p45, m45];
        for s in states {
            degree_of_polarization(s)?;
        }
        Ok(Self {
            states,
            label: label.into(),
        })
    }

    pub fn ideal() -> Self {
        Self {
            states: BbState::ALL.map(BbState::ideal),
            label: "ideal".into(),
        }
    }

    /// Sender output states from complete tomography.
    pub fn sender_output() -> Self {
        Self::from_table(
            "sender-output",
            [
                [0.944, -0.300, 0.120],
                [-0.868, 0.367, -0.292],
                [0.197, 0.969, 0.011],
                [-0.326, -0.918, 0.162],
            ],
        )
    }

    /// States as seen by the receiver before compensation. `s3` was inferred
    /// assuming unit DOP, so the vectors can sit slightly outside the ball
    /// and are renormalized to it when needed.
    pub fn receiver_uncompensated() -> Self {
        Self::from_table(
            "receiver-uncompensated",
            [
                [0.938, -0.134, 0.319],
                [-0.855, 0.094, -0.509],
                [0.102, 0.926, -0.362],
                [-0.234, -0.858, 0.457],
            ],
        )
    }

    /// States as seen by the receiver after optimal compensation.
    pub fn receiver_compensated() -> Self {
        Self::from_table(
            "compensated",
            [
                [0.949, 0.004, 0.314],
                [-0.971, 0.068, 0.228],
                [-0.091, 0.982, 0.163],
                [-0.007, -0.990, 0.137],
            ],
        )
    }

    fn from_table(label: &str, rows: [[f64; 3]; 4]) -> Self {
        let states = rows.map(|r| {
            let v = StokesVector::from_array(r);
            let n = v.norm();
            if n > 1.0 {
                v.scale(1.0 / n)
            } else {
                v
            }
        });
        Self {
            states,
            label: label.into(),
        }
    }

    pub fn get(&self, state: BbState) -> StokesVector {
        self.states[state.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BbState, StokesVector)> + '_ {
        BbState::ALL.into_iter().zip(self.states.iter().copied())
    }

    /// Applies `f` to every state, keeping the result inside the ball.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(StokesVector) -> StokesVector) -> Self {
        Self {
            states: self.states.map(|s| {
                let out = f(s);
                let n = out.norm();
                if n > 1.0 {
                    out.scale(1.0 / n)
                } else {
                    out
                }
            }),
            label: label.into(),
        }
    }

    /// Every state keeps its direction and gets the given DOP.
    pub fn with_dop(&self, dop: f64) -> Result<Self, PolarizationError> {
        let mut states = self.states;
        for s in &mut states {
            *s = s.with_dop(dop)?;
        }
        Ok(Self {
            states,
            label: self.label.clone(),
        })
    }

    pub fn mean_dop(&self) -> Result<f64, PolarizationError> {
        let mut sum = 0.0;
        for s in self.states {
            sum += degree_of_polarization(s)?;
        }
        Ok(sum / 4.0)
    }

    /// Reads a state set from TOML text with keys `H, V, P45, M45` (each a
    /// triple of reals) plus optional `label` and `dop_override`.
    pub fn from_toml_str(text: &str) -> Result<Self, PolarizationError> {
        let file: StateSetFile =
            toml::from_str(text).map_err(|e| PolarizationError::Format(e.to_string()))?;
        let mut set = Self::new(
            file.label.unwrap_or_else(|| "loaded".into()),
            StokesVector::from_array(file.h),
            StokesVector::from_array(file.v),
            StokesVector::from_array(file.p45),
            StokesVector::from_array(file.m45),
        )?;
        if let Some(dop) = file.dop_override {
            set = set.with_dop(dop)?;
        }
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolarizationError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PolarizationError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = StateSetFile {
            label: Some(self.label.clone()),
            h: self.get(BbState::H).to_array(),
            v: self.get(BbState::V).to_array(),
            p45: self.get(BbState::P45).to_array(),
            m45: self.get(BbState::M45).to_array(),
            dop_override: None,
        };
        toml::to_string(&file).expect("state set serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(rename = "H")]
    h: [f64; 3],
    #[serde(rename = "V")]
    v: [f64; 3],
    #[serde(rename = "P45")]
    p45: [f64; 3],
    #[serde(rename = "M45")]
    m45: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dop_override: Option<f64>,
}

/// Result of the preparation-quality evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparationQuality {
    pub q: f64,
    /// Cross-basis pair with the largest overlap.
    pub worst_pair: (BbState, BbState),
    pub max_overlap: f64,
}

/// `q = -log2(max |<psi_{H,V}|psi_{±45}>|^2)` over the four cross-basis pairs.
pub fn preparation_quality(set: &PreparedStateSet) -> Result<PreparationQuality, PolarizationError> {
    let mut best: Option<((BbState, BbState), f64)> = None;
    for z in [BbState::H, BbState::V] {
        for x in [BbState::P45, BbState::M45] {
            let overlap = state_fidelity(set.get(z), set.get(x))?;
            if best.is_none_or(|(_, o)| overlap > o) {
                best = Some(((z, x), overlap));
            }
        }
    }
    let (worst_pair, max_overlap) = best.expect("four pairs evaluated");
    let q = if max_overlap >= 1.0 {
        0.0
    } else {
        -max_overlap.log2()
    };
    Ok(PreparationQuality {
        q,
        worst_pair,
        max_overlap,
    })
}

/// Mean probability that a state lands in the orthogonal detector of its
/// own basis. Uses the un-normalized vectors, so mixedness counts as error.
pub fn intrinsic_qber(set: &PreparedStateSet) -> f64 {
    set.iter()
        .map(|(label, v)| (1.0 - v.dot(label.ideal())) / 2.0)
        .sum::<f64>()
        / 4.0
}

/// A linear retarder (waveplate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetarderSetting {
    retardance: f64,
    axis_angle: f64,
}

impl RetarderSetting {
    pub fn new(retardance: f64, axis_angle: f64) -> Result<Self, PolarizationError> {
        if !(retardance > 0.0 && retardance < 2.0 * std::f64::consts::PI) {
            return Err(PolarizationError::InvalidRetardance(retardance));
        }
        Ok(Self {
            retardance,
            axis_angle: normalize_axis(axis_angle),
        })
    }

    pub fn half_wave(axis_angle: f64) -> Self {
        Self {
            retardance: std::f64::consts::PI,
            axis_angle: normalize_axis(axis_angle),
        }
    }

    pub fn quarter_wave(axis_angle: f64) -> Self {
        Self {
            retardance: std::f64::consts::FRAC_PI_2,
            axis_angle: normalize_axis(axis_angle),
        }
    }

    pub fn retardance(&self) -> f64 {
        self.retardance
    }

    /// Fast-axis angle in `[0, π)`.
    pub fn axis_angle(&self) -> f64 {
        self.axis_angle
    }

    pub fn apply(&self, v: StokesVector) -> StokesVector {
        retarder_rotation(*self, v)
    }

    /// Rotation matrix acting on `(s1, s2, s3)` column vectors.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (s2p, c2p) = (2.0 * self.axis_angle).sin_cos();
        rotation_matrix([c2p, s2p, 0.0], self.retardance)
    }
}

fn normalize_axis(angle: f64) -> f64 {
    let a = angle.rem_euclid(std::f64::consts::PI);
    // rem_euclid can round up to exactly π
    if a >= std::f64::consts::PI {
        0.0
    } else {
        a
    }
}

/// Rotation of the Stokes vector by the retardance about the retarder's
/// Poincaré-sphere axis (Rodrigues formula).
pub fn retarder_rotation(setting: RetarderSetting, v: StokesVector) -> StokesVector {
    let (s2p, c2p) = (2.0 * setting.axis_angle).sin_cos();
    let axis = StokesVector::raw(c2p, s2p, 0.0);
    let (sin_d, cos_d) = setting.retardance.sin_cos();
    v.scale(cos_d)
        .add(axis.cross(v).scale(sin_d))
        .add(axis.scale(axis.dot(v) * (1.0 - cos_d)))
}

pub(crate) fn rotation_matrix(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

pub(crate) fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Applies a sequence of retarders in the order light traverses them.
pub fn apply_stack(stack: &[RetarderSetting], v: StokesVector) -> StokesVector {
    stack.iter().fold(v, |acc, r| r.apply(acc))
}

/// Rotation of the Stokes vector by `angle` about `s3`; a physical roll of
/// the sender by `angle / 2`.
pub fn rotate_about_s3(v: StokesVector, angle: f64) -> StokesVector {
    let (s, c) = angle.sin_cos();
    StokesVector::raw(c * v.s1 - s * v.s2, s * v.s1 + c * v.s2, v.s3)
}

/// Output of the compensation optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Compensation {
    /// Quarter-, quarter- and half-wave plate, in beam order.
    pub stack: [RetarderSetting; 3],
    pub residual_qber: f64,
}

impl Compensation {
    pub fn apply(&self, v: StokesVector) -> StokesVector {
        apply_stack(&self.stack, v)
    }

    pub fn apply_set(&self, set: &PreparedStateSet) -> PreparedStateSet {
        set.map("compensated", |v| self.apply(v))
    }
}

const GRID_STEP_DEG: f64 = 2.0;
const REFINE_STARTS: usize = 6;

/// Finds QWP-QWP-HWP angles minimizing the intrinsic QBER of the
/// transformed set: a 2° grid over all three angles, then a compass search
/// from the best few grid cells.
///
/// The objective is linear in the combined rotation `M`:
/// `qber = 1/2 - tr(M B) / 8` with `B = Σ v_k a_kᵀ`, so each grid point
/// costs nine multiplications.
pub fn optimize_compensation(
    measured: &PreparedStateSet,
) -> Result<Compensation, PolarizationError> {
    for (_, v) in measured.iter() {
        v.unit()?;
    }
    let mut b = [[0.0; 3]; 3];
    for (label, v) in measured.iter() {
        let a = label.ideal().to_array();
        let v = v.to_array();
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] += v[i] * a[j];
            }
        }
    }
    let objective = |m: &[[f64; 3]; 3]| -> f64 {
        let mut tr = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                tr += m[i][j] * b[j][i];
            }
        }
        0.5 - tr / 8.0
    };
    let stack_matrix = |angles: [f64; 3]| -> [[f64; 3]; 3] {
        let q1 = RetarderSetting::quarter_wave(angles[0]).matrix();
        let q2 = RetarderSetting::quarter_wave(angles[1]).matrix();
        let h = RetarderSetting::half_wave(angles[2]).matrix();
        mat_mul(&h, &mat_mul(&q2, &q1))
    };

    let n = (180.0 / GRID_STEP_DEG).round() as usize;
    let step = GRID_STEP_DEG.to_radians();
    let quarter: Vec<_> = (0..n)
        .map(|i| RetarderSetting::quarter_wave(i as f64 * step).matrix())
        .collect();
    // tr(H P B) = tr(P (B H)); precompute B H per half-wave angle.
    let bh: Vec<[[f64; 3]; 3]> = (0..n)
        .map(|i| mat_mul(&b, &RetarderSetting::half_wave(i as f64 * step).matrix()))
        .collect();

    let mut best: Vec<(f64, [usize; 3])> = Vec::with_capacity(REFINE_STARTS + 1);
    for (i, q1) in quarter.iter().enumerate() {
        for (j, q2) in quarter.iter().enumerate() {
            let p = mat_mul(q2, q1);
            for (k, c) in bh.iter().enumerate() {
                let mut tr = 0.0;
                for r in 0..3 {
                    for s in 0..3 {
                        tr += p[r][s] * c[s][r];
                    }
                }
                let val = 0.5 - tr / 8.0;
                if best.len() < REFINE_STARTS || val < best[best.len() - 1].0 {
                    let pos = best.partition_point(|(v, _)| *v <= val);
                    best.insert(pos, (val, [i, j, k]));
                    best.truncate(REFINE_STARTS);
                }
            }
        }
    }

    let mut winner: Option<([f64; 3], f64)> = None;
    for (_, idx) in best {
        let start = idx.map(|i| i as f64 * step);
        let (angles, val) = compass_search(|a| objective(&stack_matrix(a)), start, step / 2.0);
        if winner.is_none_or(|(_, w)| val < w) {
            winner = Some((angles, val));
        }
    }
    let (angles, _) = winner.expect("grid is non-empty");
    let stack = [
        RetarderSetting::quarter_wave(angles[0]),
        RetarderSetting::quarter_wave(angles[1]),
        RetarderSetting::half_wave(angles[2]),
    ];
    let residual_qber = intrinsic_qber(&measured.map("compensated", |v| apply_stack(&stack, v)));
    Ok(Compensation {
        stack,
        residual_qber,
    })
}

fn compass_search(
    f: impl Fn([f64; 3]) -> f64,
    mut x: [f64; 3],
    mut step: f64,
) -> ([f64; 3], f64) {
    let mut fx = f(x);
    while step > 1e-11 {
        let mut improved = false;
        for d in 0..3 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[d] += sign * step;
                let fy = f(y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}
