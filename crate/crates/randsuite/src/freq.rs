//! Frequency tests: monobit and frequency within a block.

use crate::special::{erfc, igamc};
use crate::TestError;

/// Frequency (monobit) test: ratio of ones to zeros over the whole sequence.
///
/// `P = erfc(|S_n| / sqrt(n) / sqrt(2))` with `S_n = #ones - #zeros`.
pub fn monobit(bits: &[u8]) -> Result<f64, TestError> {
    if bits.is_empty() {
        return Err(TestError::Empty);
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b == 1).count() as i64;
    let s = (2 * ones - bits.len() as i64).abs() as f64;
    Ok(erfc(s / n.sqrt() / std::f64::consts::SQRT_2))
}

/// Frequency test within `block`-bit blocks; trailing bits are discarded.
pub fn block_frequency(bits: &[u8], block: usize) -> Result<f64, TestError> {
    if block == 0 {
        return Err(TestError::BadParams("block size must be positive".into()));
    }
    if bits.len() < block {
        return Err(TestError::TooShort {
            needed: block,
            got: bits.len(),
        });
    }
    let blocks = bits.len() / block;
    let mut chi = 0.0;
    for i in 0..blocks {
        let ones = bits[i * block..(i + 1) * block]
            .iter()
            .filter(|&&b| b == 1)
            .count();
        let pi = ones as f64 / block as f64;
        chi += (pi - 0.5) * (pi - 0.5);
    }
    chi *= 4.0 * block as f64;
    Ok(igamc(blocks as f64 / 2.0, chi / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monobit_extremes() {
        let all_ones = vec![1u8; 100];
        assert!(monobit(&all_ones).unwrap() < 1e-12);
        let balanced: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        assert_eq!(monobit(&balanced).unwrap(), 1.0);
        assert_eq!(monobit(&[]), Err(TestError::Empty));
    }

    #[test]
    fn monobit_monotone_in_imbalance() {
        // For fixed n, the P-value is non-increasing in |S_n|.
        let n = 200usize;
        let mut last = f64::INFINITY;
        for ones in (100..=200).step_by(4) {
            let bits: Vec<u8> = (0..n).map(|i| u8::from(i < ones)).collect();
            let p = monobit(&bits).unwrap();
            assert!(p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn monobit_complementation_invariance() {
        let bits: Vec<u8> = (0..150).map(|i| ((i * 7 + 1) % 3 == 0) as u8).collect();
        let complement: Vec<u8> = bits.iter().map(|&b| 1 - b).collect();
        assert_eq!(monobit(&bits).unwrap(), monobit(&complement).unwrap());
    }

    #[test]
    fn block_frequency_rejects_degenerate_input() {
        assert!(block_frequency(&[1, 0, 1], 8).is_err());
        assert!(block_frequency(&[1, 0, 1], 0).is_err());
    }
}
