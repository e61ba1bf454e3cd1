//! Key distillation: the three-phase weight-equalization pipeline.
//!
//! Synchronized weight vectors over-represent the extreme values `+-L`
//! (increasingly so for larger input bounds), which makes the raw encoding
//! unusable as key material. The pipeline repairs this in three phases:
//!
//! 1. equalization — a single in-order pass replaces each currently
//!    most-frequent value with the least frequent value seen so far;
//! 2. dropout — entropy-budgeted subsampling so the encoded key never exceeds
//!    `K * N * E(W)` bits, with `E(W)` taken from the pre-equalization
//!    distribution;
//! 3. substitution — each full hash-sized block of the encoded key is replaced
//!    by its digest, and a trailing partial block is discarded.
//!
//! Every operation here is a pure function of its inputs, so two synchronized
//! parties running the pipeline independently always obtain the same secret.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;

use crate::bits::BitString;
use crate::tpm::{Distribution, TpmParams, WeightMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum DistillError {
    #[error("expected {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weight {value} outside [-{bound}, {bound}]")]
    OutOfRange { value: i16, bound: i16 },
    #[error("entropy must be finite and non-negative, got {0}")]
    InvalidEntropy(f64),
    #[error("zero-removed encoding requires 2L to be a power of two, got L={0}")]
    UnencodableAlphabet(i16),
    #[error("malformed config: {0}")]
    BadConfig(String),
}

/// Hash function used by the substitution phase and for weight digests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HashFn {
    Sha256,
    Sha512,
}

impl HashFn {
    pub fn output_bits(self) -> usize {
        match self {
            HashFn::Sha256 => 256,
            HashFn::Sha512 => 512,
        }
    }

    pub fn digest(self, data: &[u8]) -> Vec<u8> {
        match self {
            HashFn::Sha256 => Sha256::digest(data).to_vec(),
            HashFn::Sha512 => Sha512::digest(data).to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HashFn::Sha256 => "sha256",
            HashFn::Sha512 => "sha512",
        }
    }

    pub fn from_name(name: &str) -> Result<HashFn, DistillError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "sha256" | "sha-256" => Ok(HashFn::Sha256),
            "sha512" | "sha-512" => Ok(HashFn::Sha512),
            other => Err(DistillError::BadConfig(format!("unknown hash `{other}`"))),
        }
    }
}

/// How a weight sequence maps to bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    /// Value `v` maps to index `v + L` in `ceil(log2(2L+1))` bits.
    Full,
    /// Zeros are removed first; the survivors are coded as sign-magnitude
    /// symbols of `log2(2L)` bits (`v > 0` maps to `v - 1`, `v < 0` to
    /// `L - 1 - v`, i.e. sign bit plus `|v| - 1`). Requires `2L` to be a
    /// power of two. Sign-magnitude keeps the over-represented extreme
    /// values visible to bit-frequency statistics, which an offset code
    /// would cancel out.
    ZeroRemoved,
}

/// Distillation settings, serializable as a plain `key = value` document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub hash: HashFn,
    pub encoding: EncodingMode,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            hash: HashFn::Sha256,
            encoding: EncodingMode::Full,
        }
    }
}

impl DistillConfig {
    pub fn to_kv(&self) -> String {
        let encoding = match self.encoding {
            EncodingMode::Full => "full",
            EncodingMode::ZeroRemoved => "zero_removed",
        };
        format!("hash = {}\nencoding = {}\n", self.hash.name(), encoding)
    }

    pub fn from_kv(text: &str) -> Result<DistillConfig, DistillError> {
        let mut cfg = DistillConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DistillError::BadConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            match key.trim() {
                "hash" => cfg.hash = HashFn::from_name(value)?,
                "encoding" => {
                    cfg.encoding = match value.trim() {
                        "full" => EncodingMode::Full,
                        "zero_removed" => EncodingMode::ZeroRemoved,
                        other => {
                            return Err(DistillError::BadConfig(format!(
                                "unknown encoding `{other}`"
                            )))
                        }
                    }
                }
                other => {
                    return Err(DistillError::BadConfig(format!("unknown key `{other}`")));
                }
            }
        }
        Ok(cfg)
    }
}

/// Occurrence counts for each weight value in `[-L, L]`: the cache `F` used by
/// the equalization pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    l: i16,
    counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn new(l: i16) -> FrequencyTable {
        FrequencyTable {
            l,
            counts: vec![0; 2 * l as usize + 1],
        }
    }

    pub fn record(&mut self, v: i16) {
        self.counts[(v + self.l) as usize] += 1;
    }

    pub fn count(&self, v: i16) -> u64 {
        self.counts[(v + self.l) as usize]
    }

    /// True when `v` ties for the maximum count (argmax membership).
    pub fn is_most_frequent(&self, v: i16) -> bool {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.count(v) == max
    }

    /// Numerically smallest value among those with the minimum count, i.e.
    /// `min(argmin F)`.
    pub fn least_frequent_value(&self) -> i16 {
        let min = self.counts.iter().copied().min().unwrap_or(0);
        let idx = self
            .counts
            .iter()
            .position(|&c| c == min)
            .expect("table is never empty");
        idx as i16 - self.l
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Shannon entropy of a weight distribution, in bits per weight.
pub fn entropy(d: &Distribution) -> f64 {
    -d.probs()
        .map(|(_, p)| if p > 0.0 { p * p.log2() } else { 0.0 })
        .sum::<f64>()
}

/// Theoretical secret length in bits, `K * N * E(W)`.
pub fn secret_length(params: &TpmParams, d: &Distribution) -> f64 {
    params.weight_count() as f64 * entropy(d)
}

fn check_sequence(w: &[i16], params: &TpmParams) -> Result<(), DistillError> {
    if w.len() != params.weight_count() {
        return Err(DistillError::LengthMismatch {
            expected: params.weight_count(),
            got: w.len(),
        });
    }
    let l = params.l();
    for &v in w {
        if v < -l || v > l {
            return Err(DistillError::OutOfRange { value: v, bound: l });
        }
    }
    Ok(())
}

/// Equalization phase: single in-order pass over the flat weight sequence.
///
/// At each position, a value that ties for most-frequent-so-far is replaced by
/// the numerically smallest least-frequent value; the count of the (possibly
/// replaced) value is then incremented. Length and value range are preserved.
pub fn equalize(w: &[i16], params: &TpmParams) -> Result<Vec<i16>, DistillError> {
    check_sequence(w, params)?;
    let mut table = FrequencyTable::new(params.l());
    let mut out = Vec::with_capacity(w.len());
    for &v in w {
        let kept = if table.is_most_frequent(v) {
            table.least_frequent_value()
        } else {
            v
        };
        table.record(kept);
        out.push(kept);
    }
    Ok(out)
}

/// Dropout phase: keeps the weight at 1-based position `pos` iff the running
/// encoded length stays strictly below `pos * e`, where `e` is the entropy of
/// the weight vector *before* equalization. Each kept weight accounts for
/// `log2(2L+1)` bits.
pub fn dropout(
    w_eq: &[i16],
    pre_entropy: f64,
    params: &TpmParams,
) -> Result<Vec<i16>, DistillError> {
    check_sequence(w_eq, params)?;
    if !pre_entropy.is_finite() || pre_entropy < 0.0 {
        return Err(DistillError::InvalidEntropy(pre_entropy));
    }
    let weight_width = (2.0 * f64::from(params.l()) + 1.0).log2();
    let mut kept = Vec::new();
    let mut len_current = 0.0f64;
    for (i, &v) in w_eq.iter().enumerate() {
        let pos = (i + 1) as f64;
        if len_current < pos * pre_entropy {
            kept.push(v);
            len_current += weight_width;
        }
    }
    Ok(kept)
}

/// Encodes a weight sequence as bits, little-endian within each weight.
pub fn encode_bits(w: &[i16], l: i16, mode: EncodingMode) -> Result<BitString, DistillError> {
    for &v in w {
        if v < -l || v > l {
            return Err(DistillError::OutOfRange { value: v, bound: l });
        }
    }
    match mode {
        EncodingMode::Full => {
            // Indices 0..=2L need the bit length of 2L.
            let width = u16::BITS - (2 * l as u16).leading_zeros();
            let mut bits = BitString::with_capacity(w.len() * width as usize);
            for &v in w {
                bits.push_low_bits((v + l) as u64, width);
            }
            Ok(bits)
        }
        EncodingMode::ZeroRemoved => {
            if !(2 * l as u16).is_power_of_two() {
                return Err(DistillError::UnencodableAlphabet(l));
            }
            let width = (2 * l as u16).trailing_zeros();
            let mut bits = BitString::new();
            for &v in w {
                if v == 0 {
                    continue;
                }
                let index = if v > 0 { v - 1 } else { l - 1 - v };
                bits.push_low_bits(index as u64, width);
            }
            Ok(bits)
        }
    }
}

/// Substitution phase: replaces each full `H`-bit block with its digest, in
/// order, and drops a trailing block shorter than `H` bits.
pub fn substitute(bits: &BitString, hash: HashFn) -> BitString {
    let block = hash.output_bits();
    let mut out = BitString::with_capacity((bits.len() / block) * block);
    for i in 0..bits.len() / block {
        let bytes = bits.slice(i * block, block).to_le_bytes();
        let digest = hash.digest(&bytes);
        out.extend_from(&BitString::from_le_bytes(&digest, block));
    }
    out
}

/// Intermediate products of a full distillation run, for inspection and
/// evaluation. The pre-substitution stream is `encoded`.
#[derive(Debug, Clone)]
pub struct DistillTrace {
    pub pre_distribution: Distribution,
    pub pre_entropy: f64,
    pub equalized: Vec<i16>,
    pub kept: Vec<i16>,
    pub encoded: BitString,
    pub secret: BitString,
}

/// Full pipeline over a synchronized weight matrix: flatten row-major,
/// equalize, drop against the pre-equalization entropy budget, encode, and
/// substitute.
pub fn distill_trace(
    weights: &WeightMatrix,
    params: &TpmParams,
    cfg: &DistillConfig,
) -> Result<DistillTrace, DistillError> {
    let flat = weights.as_slice();
    let pre_distribution = Distribution::from_weights(flat, params.l())
        .map_err(|_| DistillError::LengthMismatch {
            expected: params.weight_count(),
            got: flat.len(),
        })?;
    let pre_entropy = entropy(&pre_distribution);
    let equalized = equalize(flat, params)?;
    let kept = dropout(&equalized, pre_entropy, params)?;
    let encoded = encode_bits(&kept, params.l(), cfg.encoding)?;
    let secret = substitute(&encoded, cfg.hash);
    Ok(DistillTrace {
        pre_distribution,
        pre_entropy,
        equalized,
        kept,
        encoded,
        secret,
    })
}

/// Distills the shared secret from synchronized weights.
pub fn distill(
    weights: &WeightMatrix,
    params: &TpmParams,
    cfg: &DistillConfig,
) -> Result<BitString, DistillError> {
    Ok(distill_trace(weights, params, cfg)?.secret)
}

/// Digest of the canonical full-mode weight encoding, truncated or zero-padded
/// to 32 bytes for the wire.
pub fn weight_digest32(weights: &WeightMatrix, l: i16, hash: HashFn) -> [u8; 32] {
    let encoded = encode_bits(weights.as_slice(), l, EncodingMode::Full)
        .expect("stored weights are always within range");
    let digest = hash.digest(&encoded.to_le_bytes());
    let mut out = [0u8; 32];
    let n = digest.len().min(32);
    out[..n].copy_from_slice(&digest[..n]);
    out
}
