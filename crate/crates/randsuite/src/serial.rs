//! Serial and approximate entropy tests (overlapping pattern frequencies).

use crate::special::igamc;
use crate::TestError;

/// Counts of every `m`-bit pattern over all `n` circular windows.
fn circular_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut counts = vec![0u64; 1 << m];
    let mut window = 0usize;
    // Prime the window with the first m-1 bits.
    for &b in &bits[..m - 1] {
        window = (window << 1) | usize::from(b);
    }
    for i in m - 1..n + m - 1 {
        window = ((window << 1) | usize::from(bits[i % n])) & mask;
        counts[window] += 1;
    }
    counts
}

fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum_sq: u64 = circular_counts(bits, m).iter().map(|&c| c * c).sum();
    2f64.powi(m as i32) / n * sum_sq as f64 - n
}

fn check_pattern_len(bits: &[u8], m: usize, max: usize) -> Result<(), TestError> {
    if m < 2 || m > max {
        return Err(TestError::BadParams(format!(
            "pattern length {m} outside 2..={max}"
        )));
    }
    if bits.len() < m {
        return Err(TestError::TooShort {
            needed: m,
            got: bits.len(),
        });
    }
    Ok(())
}

/// Serial test: frequencies of all overlapping `m`-bit patterns. Returns the
/// two P-values for the first and second generalized differences.
pub fn serial(bits: &[u8], m: usize) -> Result<(f64, f64), TestError> {
    check_pattern_len(bits, m, 20)?;
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m.saturating_sub(2));
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = igamc(2f64.powi(m as i32 - 2), del1 / 2.0);
    let p2 = igamc(2f64.powi(m as i32 - 3), del2 / 2.0);
    Ok((p1, p2))
}

/// Approximate entropy test: compares frequencies of `m`- and `m+1`-bit
/// overlapping patterns.
pub fn approximate_entropy(bits: &[u8], m: usize) -> Result<f64, TestError> {
    check_pattern_len(bits, m + 1, 20)?;
    let n = bits.len() as f64;
    let phi = |mm: usize| -> f64 {
        circular_counts(bits, mm)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let f = c as f64 / n;
                f * f.ln()
            })
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi = 2.0 * n * (std::f64::consts::LN_2 - apen);
    Ok(igamc(2f64.powi(m as i32 - 1), chi / 2.0))
}
