//! Template matching tests (non-overlapping and overlapping).

use statrs::function::gamma::ln_gamma;

use crate::special::igamc;
use crate::TestError;

/// All aperiodic `m`-bit templates: patterns that cannot overlap a shifted
/// copy of themselves. 148 templates exist for `m = 9`.
pub fn aperiodic_templates(m: usize) -> Vec<Vec<u8>> {
    assert!(m >= 1 && m <= 16, "template length out of range");
    let mut out = Vec::new();
    'candidates: for value in 0..(1u32 << m) {
        let bits: Vec<u8> = (0..m).map(|i| ((value >> (m - 1 - i)) & 1) as u8).collect();
        for shift in 1..m {
            if bits[..m - shift] == bits[shift..] {
                continue 'candidates;
            }
        }
        out.push(bits);
    }
    out
}

fn window_value(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

/// Non-overlapping template matching for a single template over `n_blocks`
/// equal blocks. The scan window jumps by the template length on a match.
pub fn non_overlapping_single(
    bits: &[u8],
    template: &[u8],
    n_blocks: usize,
) -> Result<f64, TestError> {
    let m = template.len();
    if m == 0 || m > 16 {
        return Err(TestError::BadParams("template length out of range".into()));
    }
    if n_blocks == 0 {
        return Err(TestError::BadParams("need at least one block".into()));
    }
    let block = bits.len() / n_blocks;
    if block < m {
        return Err(TestError::TooShort {
            needed: n_blocks * m,
            got: bits.len(),
        });
    }
    let pattern = window_value(template);
    let mask = (1u32 << m) - 1;
    let mu = (block - m + 1) as f64 / 2f64.powi(m as i32);
    let sigma2 = block as f64 * (2f64.powi(-(m as i32)) - (2 * m - 1) as f64 * 2f64.powi(-2 * m as i32));
    let mut chi = 0.0;
    for j in 0..n_blocks {
        let slice = &bits[j * block..(j + 1) * block];
        let mut hits = 0u64;
        let mut window = window_value(&slice[..m - 1]);
        let mut i = m - 1;
        while i < block {
            window = ((window << 1) | u32::from(slice[i])) & mask;
            if window == pattern {
                hits += 1;
                // Restart the window after the match.
                if i + m <= block - 1 {
                    window = window_value(&slice[i + 1..i + m]);
                }
                i += m;
            } else {
                i += 1;
            }
        }
        chi += (hits as f64 - mu) * (hits as f64 - mu) / sigma2;
    }
    Ok(igamc(n_blocks as f64 / 2.0, chi / 2.0))
}

/// Runs the non-overlapping test for every aperiodic template of length `m`
/// over the standard 8 blocks, returning `(template, P-value)` pairs.
pub fn non_overlapping_all(bits: &[u8], m: usize) -> Result<Vec<(String, f64)>, TestError> {
    let templates = aperiodic_templates(m);
    templates
        .into_iter()
        .map(|t| {
            let label: String = t.iter().map(|&b| char::from(b'0' + b)).collect();
            non_overlapping_single(bits, &t, 8).map(|p| (label, p))
        })
        .collect()
}

/// Theoretical probability of `u` overlapping matches per block.
fn overlap_probability(u: usize, eta: f64) -> f64 {
    if u == 0 {
        return (-eta).exp();
    }
    let mut sum = 0.0;
    for l in 1..=u {
        sum += (-eta - u as f64 * std::f64::consts::LN_2 + l as f64 * eta.ln()
            - ln_gamma(l as f64 + 1.0)
            + ln_gamma(u as f64)
            - ln_gamma(l as f64)
            - ln_gamma((u - l + 1) as f64))
        .exp();
    }
    sum
}

// Class probabilities used by the reference implementation for the standard
// configuration (m = 9, M = 1032); more accurate than the asymptotic formula.
const STANDARD_OVERLAP_PI: [f64; 6] = [
    0.364091, 0.185659, 0.139381, 0.100571, 0.0704323, 0.139865,
];

/// Overlapping template matching for the all-ones template of length `m`,
/// over blocks of `block` bits with six occurrence classes.
pub fn overlapping(bits: &[u8], m: usize, block: usize) -> Result<f64, TestError> {
    const K: usize = 5;
    if m == 0 || m > 16 {
        return Err(TestError::BadParams("template length out of range".into()));
    }
    if block < m {
        return Err(TestError::BadParams("block shorter than template".into()));
    }
    let blocks = bits.len() / block;
    if blocks == 0 {
        return Err(TestError::TooShort {
            needed: block,
            got: bits.len(),
        });
    }
    let mut nu = [0u64; K + 1];
    for j in 0..blocks {
        let slice = &bits[j * block..(j + 1) * block];
        let mut run = 0usize;
        let mut hits = 0usize;
        for &b in slice.iter() {
            if b == 1 {
                run += 1;
                if run >= m {
                    hits += 1;
                }
            } else {
                run = 0;
            }
        }
        nu[hits.min(K)] += 1;
    }
    let pi: Vec<f64> = if m == 9 && block == 1032 {
        STANDARD_OVERLAP_PI.to_vec()
    } else {
        let lambda = (block - m + 1) as f64 / 2f64.powi(m as i32);
        let eta = lambda / 2.0;
        let mut pi: Vec<f64> = (0..K).map(|u| overlap_probability(u, eta)).collect();
        pi.push(1.0 - pi.iter().sum::<f64>());
        pi
    };
    let n = blocks as f64;
    let chi: f64 = nu
        .iter()
        .zip(&pi)
        .map(|(&count, &p)| (count as f64 - n * p).powi(2) / (n * p))
        .sum();
    Ok(igamc(K as f64 / 2.0, chi / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aperiodic_template_counts() {
        // Known counts of aperiodic templates per length.
        assert_eq!(aperiodic_templates(2).len(), 2); // 01, 10
        assert_eq!(aperiodic_templates(3).len(), 4);
        assert_eq!(aperiodic_templates(9).len(), 148);
        assert_eq!(aperiodic_templates(10).len(), 284);
        // 111 overlaps itself, 011 does not.
        assert!(aperiodic_templates(3).contains(&vec![0, 1, 1]));
        assert!(!aperiodic_templates(3).contains(&vec![1, 1, 1]));
    }

    #[test]
    fn non_overlapping_counts_skip_after_match() {
        // In 0b101010..., template 101 matches non-overlapping at positions
        // 0, 4, 8, ... — the overlap at position 2 must not count.
        let bits: Vec<u8> = (0..40).map(|i| ((i + 1) % 2) as u8).collect();
        // Count by hand through the statistic: one block, 40 bits, mu = 38/8.
        let p = non_overlapping_single(&bits, &[1, 0, 1], 1).unwrap();
        // 10 non-overlapping matches vs mu=4.75: far in the tail.
        assert!(p < 0.05);
    }

    #[test]
    fn overlap_probability_sums_to_one() {
        let eta = 1.125;
        let total: f64 = (0..80).map(|u| overlap_probability(u, eta)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!((overlap_probability(0, 1.125) - (-1.125f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn all_ones_stream_fails_overlapping() {
        let bits = vec![1u8; 1032 * 80];
        assert!(overlapping(&bits, 9, 1032).unwrap() < 1e-9);
    }
}
