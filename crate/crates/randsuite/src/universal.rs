//! Maurer's universal statistical test.

use crate::special::erfc;
use crate::TestError;

// Expected value and variance of the per-block log distance, indexed by L.
const EXPECTED: [f64; 17] = [
    0.0, 0.73264948, 1.5374383, 2.40135, 3.311, 4.25342, 5.2177052, 6.1962507, 7.1836656,
    8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488, 15.167379,
];
const VARIANCE: [f64; 17] = [
    0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401,
    3.410, 3.416, 3.419, 3.421,
];

// Minimum sequence length for each block size L = 6..16, per the reference
// parameter table (Q = 10 * 2^L initialization blocks).
const LENGTH_THRESHOLDS: [(usize, usize); 11] = [
    (1_059_061_760, 16),
    (496_435_200, 15),
    (231_669_760, 14),
    (107_560_960, 13),
    (49_643_520, 12),
    (22_753_280, 11),
    (10_342_400, 10),
    (4_654_080, 9),
    (2_068_480, 8),
    (904_960, 7),
    (387_840, 6),
];

#[derive(Debug, Clone, Copy)]
pub struct UniversalOutcome {
    pub p_value: f64,
    /// The averaged log2 distance statistic f_n.
    pub statistic: f64,
    pub block_len: usize,
    pub init_blocks: usize,
}

/// Universal test with automatic `(L, Q)` selection from the input length.
pub fn universal(bits: &[u8]) -> Result<UniversalOutcome, TestError> {
    let n = bits.len();
    let Some(&(_, l)) = LENGTH_THRESHOLDS.iter().find(|&&(min, _)| n >= min) else {
        return Err(TestError::TooShort {
            needed: LENGTH_THRESHOLDS[LENGTH_THRESHOLDS.len() - 1].0,
            got: n,
        });
    };
    universal_with(bits, l, 10 * (1 << l))
}

/// Universal test with explicit block size `L` and `Q` initialization blocks.
pub fn universal_with(bits: &[u8], l: usize, q: usize) -> Result<UniversalOutcome, TestError> {
    if l == 0 || l > 16 {
        return Err(TestError::BadParams("block size L out of range".into()));
    }
    if q == 0 {
        return Err(TestError::BadParams("need initialization blocks".into()));
    }
    let total_blocks = bits.len() / l;
    if total_blocks <= q {
        return Err(TestError::TooShort {
            needed: (q + 1) * l,
            got: bits.len(),
        });
    }
    let k = total_blocks - q;
    let block_value = |i: usize| -> usize {
        // Blocks are numbered from 1 in the statistic's definition.
        bits[(i - 1) * l..i * l]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
    };
    let mut last_seen = vec![0u64; 1 << l];
    for i in 1..=q {
        last_seen[block_value(i)] = i as u64;
    }
    let mut sum = 0.0;
    for i in q + 1..=q + k {
        let v = block_value(i);
        sum += ((i as u64 - last_seen[v]) as f64).log2();
        last_seen[v] = i as u64;
    }
    let statistic = sum / k as f64;
    let c = 0.7 - 0.8 / l as f64
        + (4.0 + 32.0 / l as f64) * (k as f64).powf(-3.0 / l as f64) / 15.0;
    let sigma = c * (VARIANCE[l] / k as f64).sqrt();
    let p_value = erfc((statistic - EXPECTED[l]).abs() / (std::f64::consts::SQRT_2 * sigma));
    Ok(UniversalOutcome {
        p_value,
        statistic,
        block_len: l,
        init_blocks: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_is_maximally_compressible() {
        let bits = vec![0u8; 400_000];
        let out = universal(&bits).unwrap();
        assert_eq!(out.block_len, 6);
        // Every test block repeats the previous one: distance 1, log2 = 0.
        assert_eq!(out.statistic, 0.0);
        assert!(out.p_value < 1e-12);
    }

    #[test]
    fn short_input_rejected() {
        assert!(matches!(
            universal(&vec![1u8; 1000]),
            Err(TestError::TooShort { .. })
        ));
    }
}
