//! Tree parity machine state, forward pass, and the bounded-weight learning rules.
//!
//! A machine is described by the quadruple `(K, L, M, N)`: `K` hidden neurons,
//! `N` inputs per neuron, integer weights in `[-L, L]`, and public inputs drawn
//! from `{-M, .., -1, 1, .., M}`. With `M = 1` the machine degenerates to the
//! classical binary variant.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by machine construction and evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TpmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: expected {expected_k}x{expected_n}, got {got_k}x{got_n}")]
    ShapeMismatch {
        expected_k: usize,
        expected_n: usize,
        got_k: usize,
        got_n: usize,
    },
    #[error("value {value} outside [-{bound}, {bound}]")]
    OutOfRange { value: i16, bound: i16 },
    #[error("empty input")]
    Empty,
}

/// Weight update rule applied when the two parties' outputs agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRule {
    Hebbian,
    AntiHebbian,
    RandomWalk,
}

impl LearningRule {
    /// Per-entry weight delta for an agreeing neuron, before clipping.
    pub fn delta(self, output: i8, input: i16) -> i16 {
        match self {
            LearningRule::Hebbian => i16::from(output) * input,
            LearningRule::AntiHebbian => -(i16::from(output) * input),
            LearningRule::RandomWalk => input,
        }
    }
}

/// Which end of the key agreement this machine belongs to.
///
/// The altered signum function never returns zero; on a zero local field the
/// sender side resolves to `+1` and the recipient side to `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sender,
    Recipient,
}

impl Role {
    /// Sign emitted when the local field is exactly zero.
    pub fn tie_sign(self) -> i8 {
        match self {
            Role::Sender => 1,
            Role::Recipient => -1,
        }
    }

    pub fn opposite(self) -> Role {
        match self {
            Role::Sender => Role::Recipient,
            Role::Recipient => Role::Sender,
        }
    }
}

/// The machine quadruple `(K, L, M, N)` plus the negotiated learning rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpmParams {
    k: u16,
    l: i16,
    m: i16,
    n: u16,
    rule: LearningRule,
}

impl TpmParams {
    /// Validates `K, N, L, M >= 1` and the `M <= L` guard.
    ///
    /// Letting `M` approach `L` weakens the scheme, so `M > L` is rejected here;
    /// use [`TpmParams::new_unguarded`] to opt out of that single check.
    pub fn new(k: u16, l: i16, m: i16, n: u16, rule: LearningRule) -> Result<Self, TpmError> {
        let params = Self::new_unguarded(k, l, m, n, rule)?;
        if m > l {
            return Err(TpmError::InvalidParams(format!(
                "input bound M={m} exceeds weight bound L={l}"
            )));
        }
        Ok(params)
    }

    /// Same validation as [`TpmParams::new`] but without the `M <= L` guard.
    pub fn new_unguarded(
        k: u16,
        l: i16,
        m: i16,
        n: u16,
        rule: LearningRule,
    ) -> Result<Self, TpmError> {
        if k == 0 || n == 0 {
            return Err(TpmError::InvalidParams(format!(
                "K and N must be at least 1, got K={k} N={n}"
            )));
        }
        if l < 1 || m < 1 {
            return Err(TpmError::InvalidParams(format!(
                "L and M must be at least 1, got L={l} M={m}"
            )));
        }
        Ok(TpmParams { k, l, m, n, rule })
    }

    pub fn k(&self) -> usize {
        usize::from(self.k)
    }

    pub fn l(&self) -> i16 {
        self.l
    }

    pub fn m(&self) -> i16 {
        self.m
    }

    pub fn n(&self) -> usize {
        usize::from(self.n)
    }

    pub fn rule(&self) -> LearningRule {
        self.rule
    }

    /// Total number of weights per party, `K * N`.
    pub fn weight_count(&self) -> usize {
        self.k() * self.n()
    }

    /// Raw `(k, l, m, n)` fields as stored on the wire.
    pub fn wire_fields(&self) -> (u16, i16, i16, u16) {
        (self.k, self.l, self.m, self.n)
    }
}

/// `K x N` grid of integer weights, each within `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMatrix {
    k: usize,
    n: usize,
    values: Vec<i16>,
}

impl WeightMatrix {
    /// Draws every entry independently and uniformly from the `2L+1` integers
    /// in `[-L, L]`. Deterministic for a fixed seed.
    pub fn random(params: &TpmParams, seed: u64) -> WeightMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let l = params.l();
        let values = (0..params.weight_count())
            .map(|_| rng.random_range(-l..=l))
            .collect();
        WeightMatrix {
            k: params.k(),
            n: params.n(),
            values,
        }
    }

    /// Builds a matrix from row-major values, validating shape and range.
    pub fn from_values(params: &TpmParams, values: Vec<i16>) -> Result<WeightMatrix, TpmError> {
        if values.len() != params.weight_count() {
            return Err(TpmError::ShapeMismatch {
                expected_k: params.k(),
                expected_n: params.n(),
                got_k: 1,
                got_n: values.len(),
            });
        }
        let l = params.l();
        for &v in &values {
            if v < -l || v > l {
                return Err(TpmError::OutOfRange { value: v, bound: l });
            }
        }
        Ok(WeightMatrix {
            k: params.k(),
            n: params.n(),
            values,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, n: usize) -> i16 {
        self.values[k * self.n + n]
    }

    /// Row-major flat view (`k` outer, `n` inner).
    pub fn as_slice(&self) -> &[i16] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[i16] {
        &self.values[k * self.n..(k + 1) * self.n]
    }
}

/// `K x N` grid of public inputs, entries in `{-M, .., -1, 1, .., M}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputVector {
    k: usize,
    n: usize,
    values: Vec<i16>,
}

impl InputVector {
    /// Builds an input grid from row-major values, validating shape, range,
    /// and the zero exclusion.
    pub fn from_values(params: &TpmParams, values: Vec<i16>) -> Result<InputVector, TpmError> {
        if values.len() != params.weight_count() {
            return Err(TpmError::ShapeMismatch {
                expected_k: params.k(),
                expected_n: params.n(),
                got_k: 1,
                got_n: values.len(),
            });
        }
        let m = params.m();
        for &v in &values {
            if v == 0 || v < -m || v > m {
                return Err(TpmError::OutOfRange { value: v, bound: m });
            }
        }
        Ok(InputVector {
            k: params.k(),
            n: params.n(),
            values,
        })
    }

    /// Draws every entry uniformly from the `2M` values of the input alphabet.
    ///
    /// Zero is excluded: with `M = 1` the alphabet is exactly `{-1, +1}` and the
    /// machine behaves as the classical binary variant.
    pub fn random(params: &TpmParams, rng: &mut impl Rng) -> InputVector {
        let m = params.m();
        let values = (0..params.weight_count())
            .map(|_| {
                let u = rng.random_range(0..2 * i32::from(m));
                let v = u - i32::from(m);
                (if v >= 0 { v + 1 } else { v }) as i16
            })
            .collect();
        InputVector {
            k: params.k(),
            n: params.n(),
            values,
        }
    }

    pub fn as_slice(&self) -> &[i16] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[i16] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Per-neuron outputs, each `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenOutputs(Vec<i8>);

impl HiddenOutputs {
    /// Builds from explicit signs; every element must be `-1` or `+1`.
    pub fn from_signs(signs: Vec<i8>) -> Result<HiddenOutputs, TpmError> {
        if signs.is_empty() {
            return Err(TpmError::Empty);
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(TpmError::InvalidParams(
                "hidden outputs must be -1 or +1".into(),
            ));
        }
        Ok(HiddenOutputs(signs))
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Forward pass: `y_k = sign(sum_n x_kn * w_kn)` with the role-dependent
/// tie-break on a zero field.
pub fn hidden_outputs(
    w: &WeightMatrix,
    x: &InputVector,
    role: Role,
) -> Result<HiddenOutputs, TpmError> {
    if w.k != x.k || w.n != x.n {
        return Err(TpmError::ShapeMismatch {
            expected_k: w.k,
            expected_n: w.n,
            got_k: x.k,
            got_n: x.n,
        });
    }
    let mut y = Vec::with_capacity(w.k);
    for k in 0..w.k {
        let field: i64 = w
            .row(k)
            .iter()
            .zip(x.row(k))
            .map(|(&wv, &xv)| i64::from(wv) * i64::from(xv))
            .sum();
        y.push(match field {
            f if f > 0 => 1,
            f if f < 0 => -1,
            _ => role.tie_sign(),
        });
    }
    Ok(HiddenOutputs(y))
}

/// Machine output: the product of all hidden-neuron outputs.
pub fn tpm_output(y: &HiddenOutputs) -> i8 {
    y.0.iter().product()
}

/// Applies the learning rule in place. Only rows whose hidden output equals
/// the machine output `o` change; updates saturate at `+-L`.
///
/// Callers must invoke this only on rounds where both parties' outputs
/// matched; `o` is this party's own output.
pub fn apply_update(
    w: &mut WeightMatrix,
    x: &InputVector,
    y: &HiddenOutputs,
    o: i8,
    rule: LearningRule,
    l: i16,
) -> Result<(), TpmError> {
    if w.k != x.k || w.n != x.n || y.len() != w.k {
        return Err(TpmError::ShapeMismatch {
            expected_k: w.k,
            expected_n: w.n,
            got_k: x.k.min(y.len()),
            got_n: x.n,
        });
    }
    for k in 0..w.k {
        if y.0[k] != o {
            continue;
        }
        let base = k * w.n;
        for n in 0..w.n {
            let updated = w.values[base + n] + rule.delta(o, x.values[base + n]);
            w.values[base + n] = updated.clamp(-l, l);
        }
    }
    Ok(())
}

/// Empirical frequency of each weight value in `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    l: i16,
    counts: Vec<u64>,
    total: u64,
}

impl Distribution {
    /// Counts occurrences over a flat weight slice.
    pub fn from_weights(values: &[i16], l: i16) -> Result<Distribution, TpmError> {
        let mut dist = Distribution {
            l,
            counts: vec![0; 2 * usize::try_from(l).map_err(|_| TpmError::Empty)? + 1],
            total: 0,
        };
        dist.extend(values)?;
        if dist.total == 0 {
            return Err(TpmError::Empty);
        }
        Ok(dist)
    }

    /// Aggregates the weight distribution over many matrices.
    pub fn from_matrices<'a>(
        matrices: impl IntoIterator<Item = &'a WeightMatrix>,
        l: i16,
    ) -> Result<Distribution, TpmError> {
        let mut dist = Distribution {
            l,
            counts: vec![0; 2 * usize::try_from(l).map_err(|_| TpmError::Empty)? + 1],
            total: 0,
        };
        for m in matrices {
            dist.extend(m.as_slice())?;
        }
        if dist.total == 0 {
            return Err(TpmError::Empty);
        }
        Ok(dist)
    }

    fn extend(&mut self, values: &[i16]) -> Result<(), TpmError> {
        for &v in values {
            if v < -self.l || v > self.l {
                return Err(TpmError::OutOfRange {
                    value: v,
                    bound: self.l,
                });
            }
            self.counts[(v + self.l) as usize] += 1;
            self.total += 1;
        }
        Ok(())
    }

    pub fn l(&self) -> i16 {
        self.l
    }

    /// Frequency of value `v`; zero outside `[-L, L]`.
    pub fn prob(&self, v: i16) -> f64 {
        if v < -self.l || v > self.l {
            return 0.0;
        }
        self.counts[(v + self.l) as usize] as f64 / self.total as f64
    }

    /// `(value, frequency)` pairs in ascending value order.
    pub fn probs(&self) -> impl Iterator<Item = (i16, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as i16 - self.l, c as f64 / self.total as f64))
    }

    /// Combined mass at the two extreme values, `p_{-L} + p_{L}`.
    pub fn extrema_mass(&self) -> f64 {
        self.prob(-self.l) + self.prob(self.l)
    }

    /// Largest absolute deviation from the uniform level `1/(2L+1)`.
    pub fn max_uniform_deviation(&self) -> f64 {
        let uniform = 1.0 / (2.0 * f64::from(self.l) + 1.0);
        self.probs()
            .map(|(_, p)| (p - uniform).abs())
            .fold(0.0, f64::max)
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Convenience wrapper matching the shape of the other module-level operations.
pub fn weight_distribution(w: &WeightMatrix, l: i16) -> Result<Distribution, TpmError> {
    Distribution::from_weights(w.as_slice(), l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: u16, l: i16, m: i16, n: u16) -> TpmParams {
        TpmParams::new(k, l, m, n, LearningRule::Hebbian).unwrap()
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let p = params(3, 8, 1, 60);
        let a = WeightMatrix::random(&p, 17);
        let b = WeightMatrix::random(&p, 17);
        assert_eq!(a, b);
        let c = WeightMatrix::random(&p, 18);
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_bound() {
        let p = params(3, 8, 1, 60);
        for seed in 0..50 {
            let w = WeightMatrix::random(&p, seed);
            assert!(w.as_slice().iter().all(|&v| (-8..=8).contains(&v)));
        }
    }

    #[test]
    fn init_is_uniform_for_l1() {
        let mut counts = [0u64; 3];
        let draws = 1_000_000;
        // One large matrix gives the same per-entry marginal as many draws.
        let big = TpmParams::new(100, 1, 1, 10_000, LearningRule::Hebbian).unwrap();
        let w = WeightMatrix::random(&big, 7);
        for &v in w.as_slice() {
            counts[(v + 1) as usize] += 1;
        }
        assert_eq!(w.as_slice().len(), draws);
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.01,
                "frequency {freq} outside 1/3 +- 0.01"
            );
        }
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(TpmParams::new(0, 8, 1, 60, LearningRule::Hebbian).is_err());
        assert!(TpmParams::new(3, 0, 1, 60, LearningRule::Hebbian).is_err());
        assert!(TpmParams::new(3, 8, 0, 60, LearningRule::Hebbian).is_err());
        assert!(TpmParams::new(3, 8, 1, 0, LearningRule::Hebbian).is_err());
        // M > L rejected by default, allowed unguarded.
        assert!(TpmParams::new(3, 4, 5, 60, LearningRule::Hebbian).is_err());
        assert!(TpmParams::new_unguarded(3, 4, 5, 60, LearningRule::Hebbian).is_ok());
    }

    #[test]
    fn hidden_outputs_positive_sum() {
        let p = params(1, 2, 2, 2);
        let w = WeightMatrix::from_values(&p, vec![1, 1]).unwrap();
        let x = InputVector::from_values(&p, vec![1, 1]).unwrap();
        let y = hidden_outputs(&w, &x, Role::Sender).unwrap();
        assert_eq!(y.as_slice(), &[1]);
    }

    #[test]
    fn hidden_outputs_tie_break_depends_on_role() {
        let p = params(1, 2, 2, 2);
        let w = WeightMatrix::from_values(&p, vec![1, -2]).unwrap();
        let x = InputVector::from_values(&p, vec![2, 1]).unwrap();
        let sender = hidden_outputs(&w, &x, Role::Sender).unwrap();
        let recipient = hidden_outputs(&w, &x, Role::Recipient).unwrap();
        assert_eq!(sender.as_slice(), &[1]);
        assert_eq!(recipient.as_slice(), &[-1]);
    }

    #[test]
    fn hidden_outputs_per_neuron_signs() {
        let p = params(2, 3, 1, 1);
        let w = WeightMatrix::from_values(&p, vec![-3, 2]).unwrap();
        let x = InputVector::from_values(&p, vec![1, 1]).unwrap();
        let y = hidden_outputs(&w, &x, Role::Sender).unwrap();
        assert_eq!(y.as_slice(), &[-1, 1]);
    }

    #[test]
    fn hidden_outputs_shape_mismatch() {
        let p2 = params(1, 2, 2, 2);
        let p3 = params(1, 2, 2, 3);
        let w = WeightMatrix::from_values(&p2, vec![1, 1]).unwrap();
        let x = InputVector::from_values(&p3, vec![1, 1, 1]).unwrap();
        assert!(matches!(
            hidden_outputs(&w, &x, Role::Sender),
            Err(TpmError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn output_is_product_of_hidden_signs() {
        assert_eq!(tpm_output(&HiddenOutputs(vec![1, 1, 1])), 1);
        assert_eq!(tpm_output(&HiddenOutputs(vec![1, -1, 1])), -1);
        assert_eq!(tpm_output(&HiddenOutputs(vec![-1, -1])), 1);
    }

    #[test]
    fn output_parity_flips_with_any_neuron() {
        let y = HiddenOutputs(vec![1, -1, 1, 1, -1]);
        for i in 0..y.len() {
            let mut flipped = y.clone();
            flipped.0[i] = -flipped.0[i];
            assert_eq!(tpm_output(&flipped), -tpm_output(&y));
        }
    }

    #[test]
    fn hebbian_update_moves_weight_toward_output() {
        let p = params(1, 8, 1, 1);
        let mut w = WeightMatrix::from_values(&p, vec![2]).unwrap();
        let x = InputVector::from_values(&p, vec![1]).unwrap();
        let y = HiddenOutputs(vec![1]);
        apply_update(&mut w, &x, &y, 1, LearningRule::Hebbian, 8).unwrap();
        assert_eq!(w.as_slice(), &[3]);
    }

    #[test]
    fn update_saturates_at_bound() {
        let p = params(1, 8, 1, 1);
        let mut w = WeightMatrix::from_values(&p, vec![8]).unwrap();
        let x = InputVector::from_values(&p, vec![1]).unwrap();
        let y = HiddenOutputs(vec![1]);
        apply_update(&mut w, &x, &y, 1, LearningRule::Hebbian, 8).unwrap();
        assert_eq!(w.as_slice(), &[8]);

        let mut w = WeightMatrix::from_values(&p, vec![-8]).unwrap();
        let xneg = InputVector::from_values(&p, vec![-1]).unwrap();
        apply_update(&mut w, &xneg, &y, 1, LearningRule::Hebbian, 8).unwrap();
        assert_eq!(w.as_slice(), &[-8]);
    }

    #[test]
    fn update_skips_disagreeing_rows() {
        let p = params(2, 8, 3, 2);
        let original = vec![1, -2, 3, -4];
        for rule in [
            LearningRule::Hebbian,
            LearningRule::AntiHebbian,
            LearningRule::RandomWalk,
        ] {
            let mut w = WeightMatrix::from_values(&p, original.clone()).unwrap();
            let x = InputVector::from_values(&p, vec![3, -1, 2, -3]).unwrap();
            let y = HiddenOutputs(vec![-1, 1]);
            apply_update(&mut w, &x, &y, 1, rule, 8).unwrap();
            // Row 0 disagrees with o=1: bitwise unchanged. Row 1 agrees.
            assert_eq!(&w.as_slice()[..2], &original[..2]);
            assert_ne!(&w.as_slice()[2..], &original[2..]);
        }
    }

    #[test]
    fn anti_hebbian_negates_hebbian_delta() {
        for o in [-1i8, 1] {
            for x in [-3i16, -1, 1, 2] {
                assert_eq!(
                    LearningRule::AntiHebbian.delta(o, x),
                    -LearningRule::Hebbian.delta(o, x)
                );
            }
        }
    }

    #[test]
    fn weight_boundedness_under_long_update_sequences() {
        let p = TpmParams::new(2, 3, 3, 5, LearningRule::RandomWalk).unwrap();
        let mut w = WeightMatrix::random(&p, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for rule in [
            LearningRule::Hebbian,
            LearningRule::AntiHebbian,
            LearningRule::RandomWalk,
        ] {
            for _ in 0..2000 {
                let x = InputVector::random(&p, &mut rng);
                let y = hidden_outputs(&w, &x, Role::Sender).unwrap();
                let o = tpm_output(&y);
                apply_update(&mut w, &x, &y, o, rule, 3).unwrap();
                assert!(w.as_slice().iter().all(|&v| (-3..=3).contains(&v)));
            }
        }
    }

    #[test]
    fn input_alphabet_excludes_zero() {
        let p = params(3, 8, 1, 60);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = InputVector::random(&p, &mut rng);
            assert!(x.as_slice().iter().all(|&v| v == 1 || v == -1));
        }
    }

    #[test]
    fn input_alphabet_is_uniform_for_m3() {
        let p = params(1, 8, 3, 100);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut counts = std::collections::HashMap::new();
        let draws = 1_000_000usize;
        for _ in 0..draws / 100 {
            let x = InputVector::random(&p, &mut rng);
            for &v in x.as_slice() {
                *counts.entry(v).or_insert(0u64) += 1;
            }
        }
        assert_eq!(counts.len(), 6);
        for (&v, &c) in &counts {
            assert_ne!(v, 0);
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "value {v}: frequency {freq} outside 1/6 +- 0.01"
            );
        }
    }

    #[test]
    fn distribution_counts_frequencies() {
        let d = Distribution::from_weights(&[-1, -1, 0, 1], 1).unwrap();
        assert_eq!(d.prob(-1), 0.5);
        assert_eq!(d.prob(0), 0.25);
        assert_eq!(d.prob(1), 0.25);
        let total: f64 = d.probs().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distribution_point_mass() {
        let d = Distribution::from_weights(&[-8; 10], 8).unwrap();
        assert_eq!(d.prob(-8), 1.0);
        assert_eq!(d.extrema_mass(), 1.0);
        assert_eq!(d.prob(0), 0.0);
    }

    #[test]
    fn distribution_rejects_empty_and_out_of_range() {
        assert_eq!(Distribution::from_weights(&[], 1), Err(TpmError::Empty));
        assert!(matches!(
            Distribution::from_weights(&[2], 1),
            Err(TpmError::OutOfRange { .. })
        ));
    }
}
