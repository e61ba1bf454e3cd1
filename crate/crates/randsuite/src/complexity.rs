//! Linear complexity test backed by Berlekamp-Massey over GF(2).

use crate::special::igamc;
use crate::TestError;

fn xor_shifted_left(dst: &mut [u64], src: &[u64], shift: usize) {
    let word_shift = shift / 64;
    let bit_shift = shift % 64;
    if bit_shift == 0 {
        for i in (word_shift..dst.len()).rev() {
            dst[i] ^= src[i - word_shift];
        }
    } else {
        for i in (word_shift..dst.len()).rev() {
            let lo = src[i - word_shift] << bit_shift;
            let hi = if i > word_shift {
                src[i - word_shift - 1] >> (64 - bit_shift)
            } else {
                0
            };
            dst[i] ^= lo | hi;
        }
    }
}

/// Parity of `AND` between the first `len` bits of `c` and the bit run of
/// `x` starting at `offset`.
fn parity_of_shifted_and(c: &[u64], x: &[u64], offset: usize, len: usize) -> bool {
    let word_off = offset / 64;
    let bit_off = offset % 64;
    let words = len.div_ceil(64);
    let mut acc = 0u64;
    for w in 0..words {
        let lo = x.get(word_off + w).copied().unwrap_or(0) >> bit_off;
        let hi = if bit_off == 0 {
            0
        } else {
            x.get(word_off + w + 1).copied().unwrap_or(0) << (64 - bit_off)
        };
        let mut chunk = lo | hi;
        let remaining = len - w * 64;
        if remaining < 64 {
            chunk &= (1u64 << remaining) - 1;
        }
        acc ^= chunk & c[w];
    }
    acc.count_ones() % 2 == 1
}

/// Length of the shortest LFSR generating the bit sequence.
pub fn berlekamp_massey(bits: &[u8]) -> usize {
    let n = bits.len();
    if n == 0 {
        return 0;
    }
    let words = n.div_ceil(64) + 1;
    // Reversed copy so that s_{nn-i} for i = 0..=l is a contiguous bit run.
    let mut reversed = vec![0u64; words];
    for (i, &b) in bits.iter().enumerate() {
        if b == 1 {
            let j = n - 1 - i;
            reversed[j / 64] |= 1 << (j % 64);
        }
    }
    let mut c = vec![0u64; words];
    let mut b = vec![0u64; words];
    let mut t = vec![0u64; words];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m = -1i64;
    for nn in 0..n {
        let offset = n - 1 - nn;
        if parity_of_shifted_and(&c, &reversed, offset, l + 1) {
            t.copy_from_slice(&c);
            xor_shifted_left(&mut c, &b, (nn as i64 - m) as usize);
            if l <= nn / 2 {
                l = nn + 1 - l;
                m = nn as i64;
                b.copy_from_slice(&t);
            }
        }
    }
    l
}

// Class probabilities for the T statistic, per the reference publication.
const LC_PI: [f64; 7] = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];

/// Linear complexity test over `block`-bit blocks (paper override: 500).
pub fn linear_complexity(bits: &[u8], block: usize) -> Result<f64, TestError> {
    if block < 4 {
        return Err(TestError::BadParams("block size too small".into()));
    }
    let blocks = bits.len() / block;
    if blocks == 0 {
        return Err(TestError::TooShort {
            needed: block,
            got: bits.len(),
        });
    }
    let m = block as f64;
    // mu = M/2 + (9 + (-1)^(M+1))/36 - (M/3 + 2/9)/2^M, T = (-1)^M (L - mu) + 2/9.
    let sign = if block % 2 == 0 { 1.0 } else { -1.0 };
    let mu = m / 2.0 + (9.0 - sign) / 36.0 - (m / 3.0 + 2.0 / 9.0) / 2f64.powf(m);
    let mut nu = [0u64; 7];
    for j in 0..blocks {
        let l = berlekamp_massey(&bits[j * block..(j + 1) * block]) as f64;
        let t = sign * (l - mu) + 2.0 / 9.0;
        let idx = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        nu[idx] += 1;
    }
    let n = blocks as f64;
    let chi: f64 = nu
        .iter()
        .zip(&LC_PI)
        .map(|(&count, &p)| (count as f64 - n * p).powi(2) / (n * p))
        .sum();
    Ok(igamc(3.0, chi / 2.0))
}
