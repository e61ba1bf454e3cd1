//! Cumulative sums and random excursions tests over the +-1 walk.

use crate::special::{erfc, igamc, normal_cdf};
use crate::TestError;

/// Cumulative sums test, forward and backward. Each P-value bounds the
/// maximum partial-sum excursion of the walk.
pub fn cumulative_sums(bits: &[u8]) -> Result<(f64, f64), TestError> {
    if bits.is_empty() {
        return Err(TestError::Empty);
    }
    Ok((cusum_one(bits, false), cusum_one(bits, true)))
}

fn cusum_one(bits: &[u8], backward: bool) -> f64 {
    let n = bits.len();
    let mut sum = 0i64;
    let mut z = 0i64;
    for i in 0..n {
        let b = if backward { bits[n - 1 - i] } else { bits[i] };
        sum += 2 * i64::from(b) - 1;
        z = z.max(sum.abs());
    }
    let z = z as f64;
    let n = n as f64;
    let sqrt_n = n.sqrt();
    let term = |k: f64, offset: f64| normal_cdf((4.0 * k + offset) * z / sqrt_n);
    let mut p = 1.0;
    let lo = ((-n / z + 1.0) / 4.0).floor() as i64;
    let hi = ((n / z - 1.0) / 4.0).floor() as i64;
    for k in lo..=hi {
        p -= term(k as f64, 1.0) - term(k as f64, -1.0);
    }
    let lo = ((-n / z - 3.0) / 4.0).floor() as i64;
    for k in lo..=hi {
        p += term(k as f64, 3.0) - term(k as f64, 1.0);
    }
    p.clamp(0.0, 1.0)
}

/// Excursion statistics shared by the two random-excursions tests.
#[derive(Debug, Clone)]
pub struct ExcursionOutcome {
    /// Number of zero-crossing cycles in the walk.
    pub cycles: u64,
    /// `(state, P-value)` pairs in ascending state order.
    pub p_values: Vec<(i32, f64)>,
}

fn walk(bits: &[u8]) -> impl Iterator<Item = i64> + '_ {
    bits.iter().scan(0i64, |s, &b| {
        *s += 2 * i64::from(b) - 1;
        Some(*s)
    })
}

fn cycle_count(bits: &[u8]) -> u64 {
    let mut j = 0u64;
    let mut last = 0i64;
    for s in walk(bits) {
        if s == 0 {
            j += 1;
        }
        last = s;
    }
    if last != 0 {
        j += 1; // the unfinished tail counts as a cycle
    }
    j
}

/// Random excursions test: visit counts per cycle for states -4..4 (sans 0).
pub fn random_excursions(bits: &[u8]) -> Result<ExcursionOutcome, TestError> {
    if bits.is_empty() {
        return Err(TestError::Empty);
    }
    let j = cycle_count(bits);
    if j == 0 {
        return Err(TestError::Degenerate("walk never leaves the origin"));
    }
    // nu[state][k]: cycles in which `state` was visited exactly k times (k>=5 capped).
    let mut nu = [[0u64; 6]; 8];
    let mut visits = [0u64; 8];
    let mut flush = |visits: &mut [u64; 8]| {
        for (state, &v) in visits.iter().enumerate() {
            nu[state][v.min(5) as usize] += 1;
        }
        *visits = [0; 8];
    };
    let mut last = 0i64;
    for s in walk(bits) {
        if s == 0 {
            flush(&mut visits);
        } else if (-4..=4).contains(&s) {
            let idx = if s < 0 { (s + 4) as usize } else { (s + 3) as usize };
            visits[idx] += 1;
        }
        last = s;
    }
    if last != 0 {
        flush(&mut visits);
    }
    let mut p_values = Vec::with_capacity(8);
    for (idx, counts) in nu.iter().enumerate() {
        let state = if idx < 4 { idx as i32 - 4 } else { idx as i32 - 3 };
        let a = f64::from(state.abs());
        let pi0 = 1.0 - 1.0 / (2.0 * a);
        let mut pi = [0.0; 6];
        pi[0] = pi0;
        for (k, slot) in pi.iter_mut().enumerate().skip(1).take(4) {
            *slot = 1.0 / (4.0 * a * a) * pi0.powi(k as i32 - 1);
        }
        pi[5] = 1.0 / (2.0 * a) * pi0.powi(4);
        let chi: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(&count, &p)| {
                let expected = j as f64 * p;
                (count as f64 - expected).powi(2) / expected
            })
            .sum();
        p_values.push((state, igamc(2.5, chi / 2.0)));
    }
    Ok(ExcursionOutcome {
        cycles: j,
        p_values,
    })
}

/// Random excursions variant test: total visit counts for states -9..9.
pub fn random_excursions_variant(bits: &[u8]) -> Result<ExcursionOutcome, TestError> {
    if bits.is_empty() {
        return Err(TestError::Empty);
    }
    let j = cycle_count(bits);
    if j == 0 {
        return Err(TestError::Degenerate("walk never leaves the origin"));
    }
    let mut totals = [0u64; 19]; // state + 9
    for s in walk(bits) {
        if (-9..=9).contains(&s) {
            totals[(s + 9) as usize] += 1;
        }
    }
    let mut p_values = Vec::with_capacity(18);
    for state in -9i32..=9 {
        if state == 0 {
            continue;
        }
        let xi = totals[(state + 9) as usize] as f64;
        let a = f64::from(state.abs());
        let p = erfc((xi - j as f64).abs() / (2.0 * j as f64 * (4.0 * a - 2.0)).sqrt());
        p_values.push((state, p));
    }
    Ok(ExcursionOutcome {
        cycles: j,
        p_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusum_is_symmetric_for_palindrome() {
        let bits = [1u8, 0, 1, 1, 0, 1, 1, 0, 1];
        let (fwd, bwd) = cumulative_sums(&bits).unwrap();
        assert_eq!(fwd, bwd);
    }

    #[test]
    fn cusum_fails_on_drifting_walk() {
        let bits: Vec<u8> = (0..1000).map(|i| u8::from(i % 3 != 0)).collect();
        let (fwd, bwd) = cumulative_sums(&bits).unwrap();
        assert!(fwd < 1e-9);
        assert!(bwd < 1e-9);
    }

    #[test]
    fn cycle_counting_matches_hand_trace() {
        // Walk for 0110110101: -1 0 1 0 1 2 1 2 1 2 -> zeros at steps 2 and 4,
        // plus the unfinished tail.
        let bits = [0u8, 1, 1, 0, 1, 1, 0, 1, 0, 1];
        assert_eq!(cycle_count(&bits), 3);
    }

    #[test]
    fn excursion_states_are_ordered() {
        let bits: Vec<u8> = (0..4000).map(|i| ((i * 17 + 5) % 13 < 6) as u8).collect();
        let out = random_excursions(&bits).unwrap();
        let states: Vec<i32> = out.p_values.iter().map(|&(s, _)| s).collect();
        assert_eq!(states, vec![-4, -3, -2, -1, 1, 2, 3, 4]);
        let out = random_excursions_variant(&bits).unwrap();
        let states: Vec<i32> = out.p_values.iter().map(|&(s, _)| s).collect();
        let expected: Vec<i32> = (-9..=9).filter(|&s| s != 0).collect();
        assert_eq!(states, expected);
    }

    #[test]
    fn degenerate_walk_rejected() {
        // 0101... returns to the origin every other step; the walk stays in
        // {-1, 0}: fine. A strictly alternating +1/-1 stream works, but an
        // all-ones stream never crosses zero after the first step and ends
        // with one unfinished cycle.
        let ones = vec![1u8; 64];
        let out = random_excursions(&ones).unwrap();
        assert_eq!(out.cycles, 1);
    }
}
