//! Binary matrix rank test.

use crate::special::igamc;
use crate::TestError;

/// Rank of a set of GF(2) row vectors of `cols` bits each.
fn gf2_rank(rows: &mut [u64], cols: usize) -> usize {
    let mut rank = 0;
    for col in (0..cols).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&i| (rows[i] >> col) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && (*row >> col) & 1 == 1 {
                *row ^= pivot_row;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a random `m x m` GF(2) matrix has rank `r`.
fn rank_probability(m: usize, r: usize) -> f64 {
    let mut product = 1.0;
    for i in 0..r {
        let num = (1.0 - 2f64.powi(i as i32 - m as i32)).powi(2);
        let den = 1.0 - 2f64.powi(i as i32 - r as i32);
        product *= num / den;
    }
    2f64.powi((r * (2 * m - r)) as i32 - (m * m) as i32) * product
}

/// Binary matrix rank test over consecutive `size x size` bit matrices
/// (row-major fill); trailing bits are discarded.
pub fn matrix_rank(bits: &[u8], size: usize) -> Result<f64, TestError> {
    if size == 0 || size > 64 {
        return Err(TestError::BadParams(
            "matrix size must be between 1 and 64".into(),
        ));
    }
    let per_matrix = size * size;
    let count = bits.len() / per_matrix;
    if count == 0 {
        return Err(TestError::TooShort {
            needed: per_matrix,
            got: bits.len(),
        });
    }
    let mut full = 0u64;
    let mut minus_one = 0u64;
    let mut rows = vec![0u64; size];
    for matrix in 0..count {
        let chunk = &bits[matrix * per_matrix..(matrix + 1) * per_matrix];
        for (r, row) in rows.iter_mut().enumerate() {
            let mut value = 0u64;
            for c in 0..size {
                value = (value << 1) | u64::from(chunk[r * size + c]);
            }
            *row = value;
        }
        match gf2_rank(&mut rows, size) {
            r if r == size => full += 1,
            r if r == size - 1 => minus_one += 1,
            _ => {}
        }
    }
    let p_full = rank_probability(size, size);
    let p_minus_one = rank_probability(size, size - 1);
    let p_rest = 1.0 - p_full - p_minus_one;
    let rest = count as u64 - full - minus_one;
    let n = count as f64;
    let chi = (full as f64 - p_full * n).powi(2) / (p_full * n)
        + (minus_one as f64 - p_minus_one * n).powi(2) / (p_minus_one * n)
        + (rest as f64 - p_rest * n).powi(2) / (p_rest * n);
    Ok(igamc(1.0, chi / 2.0))
}
