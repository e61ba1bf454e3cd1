//! Runs test and longest run of ones in a block.

use crate::special::{erfc, igamc};
use crate::TestError;

/// Runs test: number of oscillations between zeros and ones.
///
/// Per the reference definition, if the ones proportion already fails the
/// frequency prerequisite (`|pi - 1/2| >= 2/sqrt(n)`) the P-value is 0.
pub fn runs(bits: &[u8]) -> Result<f64, TestError> {
    if bits.len() < 2 {
        return Err(TestError::TooShort {
            needed: 2,
            got: bits.len(),
        });
    }
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b == 1).count() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(0.0);
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    Ok(erfc(num / den))
}

struct LongestRunSetup {
    block: usize,
    classes: usize,
    lowest: usize,
    pi: &'static [f64],
}

fn longest_run_setup(n: usize) -> Result<LongestRunSetup, TestError> {
    if n < 128 {
        return Err(TestError::TooShort { needed: 128, got: n });
    }
    Ok(if n < 6272 {
        LongestRunSetup {
            block: 8,
            classes: 3,
            lowest: 1,
            pi: &[0.21484375, 0.3671875, 0.23046875, 0.1875],
        }
    } else if n < 750_000 {
        LongestRunSetup {
            block: 128,
            classes: 5,
            lowest: 4,
            pi: &[
                0.1174035788,
                0.242955959,
                0.249363483,
                0.17517706,
                0.102701071,
                0.112398847,
            ],
        }
    } else {
        LongestRunSetup {
            block: 10_000,
            classes: 6,
            lowest: 10,
            pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        }
    })
}

/// Longest run of ones per block, binned against the reference probabilities.
/// Block size and class boundaries are chosen from the sequence length.
pub fn longest_run(bits: &[u8]) -> Result<f64, TestError> {
    let setup = longest_run_setup(bits.len())?;
    let blocks = bits.len() / setup.block;
    let mut nu = vec![0u64; setup.classes + 1];
    for i in 0..blocks {
        let mut longest = 0usize;
        let mut current = 0usize;
        for &b in &bits[i * setup.block..(i + 1) * setup.block] {
            if b == 1 {
                current += 1;
                longest = longest.max(current);
            } else {
                current = 0;
            }
        }
        let idx = longest.clamp(setup.lowest, setup.lowest + setup.classes) - setup.lowest;
        nu[idx] += 1;
    }
    let n_blocks = blocks as f64;
    let chi: f64 = nu
        .iter()
        .zip(setup.pi)
        .map(|(&count, &p)| {
            let expected = n_blocks * p;
            (count as f64 - expected) * (count as f64 - expected) / expected
        })
        .sum();
    Ok(igamc(setup.classes as f64 / 2.0, chi / 2.0))
}
