//! Discrete Fourier transform (spectral) test.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::special::erfc;
use crate::TestError;

/// Spectral test: counts DFT peaks below the 95% threshold over the first
/// `n/2` frequencies (DC included) and compares against the expectation.
pub fn spectral(bits: &[u8]) -> Result<f64, TestError> {
    let n = bits.len();
    if n < 2 {
        return Err(TestError::TooShort { needed: 2, got: n });
    }
    let mut buffer: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(2.0 * f64::from(b) - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let threshold = (n as f64 * (1.0 / 0.05f64).ln()).sqrt();
    let below = buffer[..n / 2]
        .iter()
        .filter(|c| c.norm() < threshold)
        .count();
    let expected = 0.95 * n as f64 / 2.0;
    let d = (below as f64 - expected) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
    Ok(erfc(d.abs() / std::f64::consts::SQRT_2))
}
