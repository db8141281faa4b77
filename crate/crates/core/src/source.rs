//! Transmitter model: a cyclic pseudorandom pattern of BB84 symbols, weak
//! coherent pulses with Poissonian photon number, and unpolarized
//! background emission.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polarization::{Basis, BbState, PreparedStateSet, StokesVector};

/// Pattern memory of the sender electronics, in symbols.
pub const DEFAULT_PATTERN_LENGTH: usize = 131_056;
pub const DEFAULT_REP_RATE: f64 = 1e8;
pub const DEFAULT_MU: f64 = 0.042;

const PATTERN_MAGIC: &[u8; 4] = b"BB84";
const PATTERN_VERSION: u8 = 1;
const PATTERN_HEADER_LEN: usize = 4 + 1 + 8 + 8;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("pattern length must be positive")]
    EmptyPattern,
    #[error("invalid source configuration: {0}")]
    InvalidConfig(String),
    #[error("pattern file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub bit: u8,
    pub basis: Basis,
}

impl Symbol {
    pub fn state(self) -> BbState {
        BbState::from_symbol(self.bit, self.basis)
    }

    /// One byte per symbol: bit in the LSB, basis in bit 1 (0 = Z, 1 = X).
    pub fn to_byte(self) -> u8 {
        let basis = match self.basis {
            Basis::Z => 0,
            Basis::X => 1,
        };
        (self.bit & 1) | (basis << 1)
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        if b > 3 {
            return None;
        }
        let basis = if b & 2 == 0 { Basis::Z } else { Basis::X };
        Some(Self { bit: b & 1, basis })
    }
}

/// The pattern uploaded to the sender, replayed cyclically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBuffer {
    symbols: Vec<Symbol>,
    seed: u64,
}

impl PatternBuffer {
    pub fn from_symbols(symbols: Vec<Symbol>, seed: u64) -> Result<Self, SourceError> {
        if symbols.is_empty() {
            return Err(SourceError::EmptyPattern);
        }
        Ok(Self { symbols, seed })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, slot_index: u64) -> Symbol {
        self.symbols[(slot_index % self.symbols.len() as u64) as usize]
    }

    /// Replay period in seconds.
    pub fn period(&self, rep_rate: f64) -> f64 {
        self.symbols.len() as f64 / rep_rate
    }

    /// Writes the pattern file.
    ///
    /// Layout: magic `BB84`, version byte, symbol count (u64 LE), seed (u64
    /// LE), then one byte per symbol.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), SourceError> {
        w.write_all(PATTERN_MAGIC)?;
        w.write_all(&[PATTERN_VERSION])?;
        w.write_all(&(self.symbols.len() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let bytes: Vec<u8> = self.symbols.iter().map(|s| s.to_byte()).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SourceError> {
        let mut header = [0u8; PATTERN_HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| SourceError::Format("truncated header".into()))?;
        if &header[..4] != PATTERN_MAGIC {
            return Err(SourceError::Format("bad magic".into()));
        }
        if header[4] != PATTERN_VERSION {
            return Err(SourceError::Format(format!("unsupported version {}", header[4])));
        }
        let len = u64::from_le_bytes(header[5..13].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(header[13..21].try_into().unwrap());
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != len {
            return Err(SourceError::Format(format!(
                "header says {len} symbols, file holds {}",
                body.len()
            )));
        }
        let symbols = body
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                Symbol::from_byte(b)
                    .ok_or_else(|| SourceError::Format(format!("symbol {i}: invalid byte {b:#04x}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_symbols(symbols, seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SourceError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Deterministic pattern: bit and basis drawn uniformly from a ChaCha stream.
pub fn build_pattern(seed: u64, length: usize) -> Result<PatternBuffer, SourceError> {
    if length == 0 {
        return Err(SourceError::EmptyPattern);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..length)
        .map(|_| {
            let r: u8 = rng.random();
            Symbol::from_byte(r & 3).expect("two bits")
        })
        .collect();
    PatternBuffer::from_symbols(symbols, seed)
}

/// Transmitter parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub mu: f64,
    pub rep_rate: f64,
    pub states: PreparedStateSet,
    /// Unpolarized emission below threshold, photons per second.
    pub background_rate: f64,
    /// Only affects tracking; kept for configuration completeness.
    pub beacon_on: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            rep_rate: DEFAULT_REP_RATE,
            states: PreparedStateSet::ideal(),
            background_rate: 0.0,
            beacon_on: true,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), SourceError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(SourceError::InvalidConfig(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return Err(SourceError::InvalidConfig(format!(
                "rep_rate = {} must be > 0",
                self.rep_rate
            )));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(SourceError::InvalidConfig(format!(
                "background_rate = {} must be >= 0",
                self.background_rate
            )));
        }
        Ok(())
    }

    /// Mean background photons attached to each slot.
    pub fn background_per_slot(&self) -> f64 {
        self.background_rate / self.rep_rate
    }
}

/// Photons leaving the sender in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionEvent {
    pub slot_index: u64,
    pub photon_count: u32,
    pub state_label: BbState,
    pub stokes: StokesVector,
    pub is_background: bool,
}

impl EmissionEvent {
    pub fn time(&self, rep_rate: f64) -> f64 {
        self.slot_index as f64 / rep_rate
    }
}

/// Signal pulse of a slot plus any background photons sharing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEmission {
    pub signal: EmissionEvent,
    pub background: Option<EmissionEvent>,
}

impl SlotEmission {
    pub fn events(&self) -> impl Iterator<Item = &EmissionEvent> {
        std::iter::once(&self.signal).chain(self.background.as_ref())
    }
}

/// Poisson sampler for the photon number of a weak coherent pulse.
#[derive(Debug, Clone, Copy)]
pub struct PhotonNumber {
    dist: Option<Poisson<f64>>,
}

impl PhotonNumber {
    /// `mean` of zero gives a sampler that always returns zero.
    pub fn new(mean: f64) -> Result<Self, SourceError> {
        if mean == 0.0 {
            return Ok(Self { dist: None });
        }
        let dist = Poisson::new(mean)
            .map_err(|e| SourceError::InvalidConfig(format!("mean photon number {mean}: {e}")))?;
        Ok(Self { dist: Some(dist) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.dist {
            Some(d) => d.sample(rng) as u32,
            None => 0,
        }
    }
}

/// One Poisson draw with mean `mu`.
pub fn sample_photon_number<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u32, SourceError> {
    if !(mu > 0.0) {
        return Err(SourceError::InvalidConfig(format!("mu = {mu} must be > 0")));
    }
    Ok(PhotonNumber::new(mu)?.sample(rng))
}

/// Per-run sampler state shared by all slots.
#[derive(Debug, Clone)]
pub struct Emitter<'a> {
    pattern: &'a PatternBuffer,
    cfg: &'a SourceConfig,
    signal: PhotonNumber,
    background: PhotonNumber,
}

impl<'a> Emitter<'a> {
    pub fn new(pattern: &'a PatternBuffer, cfg: &'a SourceConfig) -> Result<Self, SourceError> {
        cfg.validate()?;
        Ok(Self {
            pattern,
            cfg,
            signal: PhotonNumber::new(cfg.mu)?,
            background: PhotonNumber::new(cfg.background_per_slot())?,
        })
    }

    pub fn emit<R: Rng + ?Sized>(&self, slot_index: u64, rng: &mut R) -> SlotEmission {
        let label = self.pattern.symbol(slot_index).state();
        let signal = EmissionEvent {
            slot_index,
            photon_count: self.signal.sample(rng),
            state_label: label,
            stokes: self.cfg.states.get(label),
            is_background: false,
        };
        let n_bg = self.background.sample(rng);
        let background = (n_bg > 0).then_some(EmissionEvent {
            slot_index,
            photon_count: n_bg,
            state_label: label,
            stokes: StokesVector::UNPOLARIZED,
            is_background: true,
        });
        SlotEmission { signal, background }
    }
}

/// Emission for a single slot. For many slots build an [`Emitter`] once.
pub fn emission_for_slot<R: Rng + ?Sized>(
    pattern: &PatternBuffer,
    slot_index: u64,
    cfg: &SourceConfig,
    rng: &mut R,
) -> Result<SlotEmission, SourceError> {
    Ok(Emitter::new(pattern, cfg)?.emit(slot_index, rng))
}

/// Slots per independent random stream.
pub const SLOT_BLOCK: u64 = 1 << 16;

/// Random stream for a block of slots. Slot `k` belongs to block
/// `k / SLOT_BLOCK`; blocks can be generated in any order or in parallel
/// and give identical results.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pattern_is_deterministic() {
        let a = build_pattern(42, DEFAULT_PATTERN_LENGTH).unwrap();
        let b = build_pattern(42, DEFAULT_PATTERN_LENGTH).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = build_pattern(42, DEFAULT_PATTERN_LENGTH).unwrap();
        let b = build_pattern(43, DEFAULT_PATTERN_LENGTH).unwrap();
        let mismatches = a
            .symbols()
            .iter()
            .zip(b.symbols())
            .filter(|(x, y)| x != y)
            .count();
        // independent uniform symbols mismatch with probability 3/4
        assert!(mismatches as f64 > 0.4 * DEFAULT_PATTERN_LENGTH as f64);
    }

    #[test]
    fn pattern_period_at_100_mhz() {
        let p = build_pattern(1, DEFAULT_PATTERN_LENGTH).unwrap();
        assert_abs_diff_eq!(p.period(DEFAULT_REP_RATE), 1.31056e-3, epsilon = 1e-12);
    }

    #[test]
    fn pattern_frequencies_within_three_sigma() {
        let n = 100_000;
        let p = build_pattern(7, n).unwrap();
        let ones = p.symbols().iter().filter(|s| s.bit == 1).count() as f64;
        let x = p.symbols().iter().filter(|s| s.basis == Basis::X).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 3.0 * sigma);
        assert!((x - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn zero_length_pattern_rejected() {
        assert!(matches!(build_pattern(1, 0), Err(SourceError::EmptyPattern)));
    }

    #[test]
    fn symbol_byte_encoding() {
        for b in 0..4u8 {
            assert_eq!(Symbol::from_byte(b).unwrap().to_byte(), b);
        }
        assert_eq!(Symbol::from_byte(4), None);
        assert_eq!(Symbol::from_byte(0b10).unwrap().state(), BbState::P45);
    }

    #[test]
    fn pattern_file_rejects_corruption() {
        let p = build_pattern(3, 16).unwrap();
        let mut bytes = Vec::new();
        p.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), PATTERN_HEADER_LEN + 16);
        assert_eq!(PatternBuffer::read_from(&bytes[..]).unwrap(), p);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(PatternBuffer::read_from(&bad[..]).is_err());
        let mut bad = bytes.clone();
        bad[PATTERN_HEADER_LEN] = 9;
        assert!(PatternBuffer::read_from(&bad[..]).is_err());
        assert!(PatternBuffer::read_from(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn poisson_vacuum_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sampler = PhotonNumber::new(0.042).unwrap();
        let n = 1_000_000;
        let mut zero = 0u32;
        let mut one_or_more = 0u32;
        let mut two_or_more = 0u32;
        for _ in 0..n {
            let k = sampler.sample(&mut rng);
            match k {
                0 => zero += 1,
                1 => one_or_more += 1,
                _ => {
                    one_or_more += 1;
                    two_or_more += 1
                }
            }
        }
        assert_abs_diff_eq!(zero as f64 / n as f64, (-0.042f64).exp(), epsilon = 0.001);
        let mu: f64 = 0.042;
        let expected = (1.0 - (1.0 + mu) * (-mu).exp()) / (1.0 - (-mu).exp());
        assert_abs_diff_eq!(expected, 0.0209, epsilon = 1e-4);
        assert_abs_diff_eq!(
            two_or_more as f64 / one_or_more as f64,
            expected,
            epsilon = 0.002
        );
    }

    #[test]
    fn tiny_mu_gives_zero_photons() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(sample_photon_number(1e-9, &mut rng).unwrap(), 0);
        }
        assert!(sample_photon_number(0.0, &mut rng).is_err());
    }

    #[test]
    fn symbol_maps_to_configured_state() {
        let pattern = PatternBuffer::from_symbols(vec![Symbol { bit: 0, basis: Basis::Z }], 0).unwrap();
        let cfg = SourceConfig {
            states: PreparedStateSet::sender_output(),
            ..SourceConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let em = emission_for_slot(&pattern, 5, &cfg, &mut rng).unwrap();
        assert_eq!(em.signal.state_label, BbState::H);
        assert_eq!(em.signal.stokes, cfg.states.get(BbState::H));
        assert!(em.background.is_none());
    }

    #[test]
    fn mean_photon_number_per_slot() {
        let pattern = build_pattern(11, DEFAULT_PATTERN_LENGTH).unwrap();
        let cfg = SourceConfig::default();
        let emitter = Emitter::new(&pattern, &cfg).unwrap();
        let n = 10_000_000u64;
        let mut total = 0u64;
        for block in 0..n.div_ceil(SLOT_BLOCK) {
            let mut rng = block_rng(99, block);
            for slot in block * SLOT_BLOCK..((block + 1) * SLOT_BLOCK).min(n) {
                total += emitter.emit(slot, &mut rng).signal.photon_count as u64;
            }
        }
        assert_abs_diff_eq!(total as f64 / n as f64, 0.042, epsilon = 0.0005);
    }

    #[test]
    fn background_events_are_unpolarized() {
        let pattern = build_pattern(11, 64).unwrap();
        let cfg = SourceConfig {
            background_rate: 1e7,
            ..SourceConfig::default()
        };
        let emitter = Emitter::new(&pattern, &cfg).unwrap();
        let mut rng = block_rng(1, 0);
        let mut seen = 0;
        for slot in 0..10_000 {
            if let Some(bg) = emitter.emit(slot, &mut rng).background {
                assert!(bg.is_background);
                assert_eq!(bg.stokes, StokesVector::UNPOLARIZED);
                seen += 1;
            }
        }
        // mean 0.1 photons per slot
        assert!((800..1200).contains(&seen), "{seen}");
    }

    #[test]
    fn label_marginals_match_pattern_over_a_period() {
        let pattern = build_pattern(21, 4096).unwrap();
        let cfg = SourceConfig::default();
        let emitter = Emitter::new(&pattern, &cfg).unwrap();
        let mut rng = block_rng(1, 0);
        let mut counts = [0usize; 4];
        for slot in 4096..8192 {
            counts[emitter.emit(slot, &mut rng).signal.state_label.index()] += 1;
        }
        let mut expected = [0usize; 4];
        for s in pattern.symbols() {
            expected[s.state().index()] += 1;
        }
        assert_eq!(counts, expected);
    }

    #[test]
    fn block_streams_are_reproducible() {
        let pattern = build_pattern(2, 1000).unwrap();
        let cfg = SourceConfig::default();
        let emitter = Emitter::new(&pattern, &cfg).unwrap();
        let run = |block| {
            let mut rng = block_rng(7, block);
            (0..1000).map(|s| emitter.emit(s, &mut rng).signal.photon_count).collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }
}
