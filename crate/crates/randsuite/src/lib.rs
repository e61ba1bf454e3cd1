//! Statistical randomness test battery (NIST SP 800-22 family).
//!
//! Fifteen tests evaluate a bit string for use as key material. Each test
//! yields one or more P-values; a P-value passes at significance 0.01. The
//! battery runs with the reference defaults except where the evaluation
//! procedure overrides them: 128-bit blocks for the block frequency test and
//! 500-bit blocks for the linear complexity test.
//!
//! Individual statistics are exposed as free functions taking raw 0/1 byte
//! slices (useful for custom parameters); [`run_test`] and [`run_suite`]
//! apply the battery policy: inputs under a test's minimum length are flagged
//! [`TestStatus::NotApplicable`] rather than failed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use neurokey_core::BitString;

mod complexity;
mod excursions;
mod freq;
mod rank;
mod runs;
mod serial;
mod special;
mod spectral;
mod template;
pub mod testdata;

pub use complexity::{berlekamp_massey, linear_complexity};
pub use excursions::{
    cumulative_sums, random_excursions, random_excursions_variant, ExcursionOutcome,
};
pub use freq::{block_frequency, monobit};
pub use rank::matrix_rank;
pub use runs::{longest_run, runs};
pub use serial::{approximate_entropy, serial};
pub use spectral::spectral;
pub use template::{aperiodic_templates, non_overlapping_all, non_overlapping_single, overlapping};
pub use universal::{universal, universal_with, UniversalOutcome};

mod universal;

/// Significance level: a P-value passes iff it is at least this.
pub const ALPHA: f64 = 0.01;

/// Minimum cycle count for the random excursions tests to be meaningful.
pub const MIN_EXCURSION_CYCLES: u64 = 500;

#[derive(Debug, Error, PartialEq)]
pub enum TestError {
    #[error("empty input")]
    Empty,
    #[error("input too short: need {needed} bits, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// The fifteen tests, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Monobit,
    BlockFrequency,
    Runs,
    LongestRun,
    MatrixRank,
    Spectral,
    NonOverlappingTemplate,
    OverlappingTemplate,
    MaurerUniversal,
    LinearComplexity,
    Serial,
    ApproximateEntropy,
    CumulativeSums,
    RandomExcursions,
    RandomExcursionsVariant,
}

impl TestId {
    pub const ALL: [TestId; 15] = [
        TestId::Monobit,
        TestId::BlockFrequency,
        TestId::Runs,
        TestId::LongestRun,
        TestId::MatrixRank,
        TestId::Spectral,
        TestId::NonOverlappingTemplate,
        TestId::OverlappingTemplate,
        TestId::MaurerUniversal,
        TestId::LinearComplexity,
        TestId::Serial,
        TestId::ApproximateEntropy,
        TestId::CumulativeSums,
        TestId::RandomExcursions,
        TestId::RandomExcursionsVariant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::Monobit => "frequency (monobit)",
            TestId::BlockFrequency => "frequency within a block",
            TestId::Runs => "runs",
            TestId::LongestRun => "longest run of ones in a block",
            TestId::MatrixRank => "binary matrix rank",
            TestId::Spectral => "discrete fourier transform (spectral)",
            TestId::NonOverlappingTemplate => "non-overlapping template matching",
            TestId::OverlappingTemplate => "overlapping template matching",
            TestId::MaurerUniversal => "maurer's universal statistical",
            TestId::LinearComplexity => "linear complexity",
            TestId::Serial => "serial",
            TestId::ApproximateEntropy => "approximate entropy",
            TestId::CumulativeSums => "cumulative sums",
            TestId::RandomExcursions => "random excursions",
            TestId::RandomExcursionsVariant => "random excursions variant",
        }
    }

    /// 1-based position in the standard report order.
    pub fn number(self) -> usize {
        TestId::ALL.iter().position(|&t| t == self).unwrap() + 1
    }
}

/// Battery parameters. Defaults follow the reference publication with the
/// evaluation overrides for block frequency (128) and linear complexity (500).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub block_frequency_block: usize,
    pub linear_complexity_block: usize,
    pub template_len: usize,
    pub overlapping_block: usize,
    pub serial_pattern: usize,
    pub apen_pattern: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            block_frequency_block: 128,
            linear_complexity_block: 500,
            template_len: 9,
            overlapping_block: 1032,
            serial_pattern: 16,
            apen_pattern: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum TestStatus {
    Applied,
    NotApplicable(String),
}

/// Result of one test: zero or more labeled P-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub id: TestId,
    pub status: TestStatus,
    pub p_values: Vec<f64>,
    /// One label per P-value (state, direction, or template).
    pub labels: Vec<String>,
}

impl TestResult {
    fn applied(id: TestId, labeled: Vec<(String, f64)>) -> TestResult {
        let (labels, p_values) = labeled.into_iter().unzip();
        TestResult {
            id,
            status: TestStatus::Applied,
            p_values,
            labels,
        }
    }

    fn not_applicable(id: TestId, reason: String) -> TestResult {
        TestResult {
            id,
            status: TestStatus::NotApplicable(reason),
            p_values: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.status == TestStatus::Applied
    }

    /// Per-P-value verdicts at [`ALPHA`].
    pub fn passes(&self) -> Vec<bool> {
        self.p_values.iter().map(|&p| p >= ALPHA).collect()
    }

    pub fn min_p(&self) -> Option<f64> {
        self.p_values.iter().copied().reduce(f64::min)
    }

    /// Family verdict: `None` when not applicable, otherwise the proportion
    /// rule over all P-values (see [`family_pass`]).
    pub fn family_pass(&self) -> Option<bool> {
        self.is_applicable().then(|| family_pass(&self.p_values))
    }
}

/// Proportion rule for a family of P-values: the passing fraction must reach
/// `0.99 - 3 * sqrt(0.0099 / count)`. A single P-value must simply pass; for
/// large families (the 148 non-overlapping templates) a few sub-threshold
/// values are expected of true randomness and tolerated.
pub fn family_pass(p_values: &[f64]) -> bool {
    if p_values.is_empty() {
        return false;
    }
    let count = p_values.len() as f64;
    let passing = p_values.iter().filter(|&&p| p >= ALPHA).count() as f64;
    let threshold = if p_values.len() == 1 {
        1.0
    } else {
        0.99 - 3.0 * (0.01 * 0.99 / count).sqrt()
    };
    passing / count >= threshold
}

/// Minimum input length for each test under the given parameters; below it
/// the suite reports NotApplicable.
pub fn minimum_length(id: TestId, params: &SuiteParams) -> usize {
    match id {
        TestId::Monobit | TestId::Runs | TestId::CumulativeSums => 100,
        TestId::BlockFrequency => params.block_frequency_block.max(100),
        TestId::LongestRun => 128,
        TestId::MatrixRank => 38 * 32 * 32,
        TestId::Spectral => 1000,
        // Mean occurrences per block must reach ~5 for the chi-square fit.
        TestId::NonOverlappingTemplate => 8 * (5 * (1 << params.template_len) + params.template_len),
        // At least 72 blocks so every occurrence class expects >= 5 hits.
        TestId::OverlappingTemplate => 72 * params.overlapping_block,
        TestId::MaurerUniversal => 387_840,
        TestId::LinearComplexity => 200 * params.linear_complexity_block,
        TestId::Serial => (1 << (params.serial_pattern + 2)) + 1,
        TestId::ApproximateEntropy => (1 << (params.apen_pattern + 5)) + 1,
        TestId::RandomExcursions | TestId::RandomExcursionsVariant => 100,
    }
}

fn single(p: Result<f64, TestError>) -> Result<Vec<(String, f64)>, TestError> {
    p.map(|p| vec![(String::new(), p)])
}

fn run_raw(bits: &[u8], id: TestId, params: &SuiteParams) -> Result<Vec<(String, f64)>, TestError> {
    match id {
        TestId::Monobit => single(freq::monobit(bits)),
        TestId::BlockFrequency => single(freq::block_frequency(bits, params.block_frequency_block)),
        TestId::Runs => single(runs::runs(bits)),
        TestId::LongestRun => single(runs::longest_run(bits)),
        TestId::MatrixRank => single(rank::matrix_rank(bits, 32)),
        TestId::Spectral => single(spectral::spectral(bits)),
        TestId::NonOverlappingTemplate => template::non_overlapping_all(bits, params.template_len),
        TestId::OverlappingTemplate => single(template::overlapping(
            bits,
            params.template_len,
            params.overlapping_block,
        )),
        TestId::MaurerUniversal => single(universal::universal(bits).map(|o| o.p_value)),
        TestId::LinearComplexity => single(complexity::linear_complexity(
            bits,
            params.linear_complexity_block,
        )),
        TestId::Serial => serial::serial(bits, params.serial_pattern).map(|(p1, p2)| {
            vec![("p1".to_string(), p1), ("p2".to_string(), p2)]
        }),
        TestId::ApproximateEntropy => {
            single(serial::approximate_entropy(bits, params.apen_pattern))
        }
        TestId::CumulativeSums => excursions::cumulative_sums(bits).map(|(fwd, bwd)| {
            vec![("fwd".to_string(), fwd), ("bwd".to_string(), bwd)]
        }),
        TestId::RandomExcursions => {
            let out = excursions::random_excursions(bits)?;
            check_cycles(out)
        }
        TestId::RandomExcursionsVariant => {
            let out = excursions::random_excursions_variant(bits)?;
            check_cycles(out)
        }
    }
}

fn check_cycles(out: ExcursionOutcome) -> Result<Vec<(String, f64)>, TestError> {
    if out.cycles < MIN_EXCURSION_CYCLES {
        return Err(TestError::Degenerate("too few zero-crossing cycles"));
    }
    Ok(out
        .p_values
        .into_iter()
        .map(|(state, p)| (format!("state {state:+}"), p))
        .collect())
}

fn run_test_raw(bits: &[u8], id: TestId, params: &SuiteParams) -> TestResult {
    let min = minimum_length(id, params);
    if bits.len() < min {
        return TestResult::not_applicable(
            id,
            format!("input of {} bits is below the {min}-bit minimum", bits.len()),
        );
    }
    match run_raw(bits, id, params) {
        Ok(labeled) => TestResult::applied(id, labeled),
        Err(e) => TestResult::not_applicable(id, e.to_string()),
    }
}

/// Runs one test with the battery policy.
pub fn run_test(bits: &BitString, id: TestId, params: &SuiteParams) -> TestResult {
    run_test_raw(&bits.to_bit_bytes(), id, params)
}

/// Full battery report, tests in standard order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub bit_len: usize,
    pub results: Vec<TestResult>,
}

impl SuiteReport {
    pub fn result(&self, id: TestId) -> &TestResult {
        &self.results[id.number() - 1]
    }

    /// Ids of applicable families whose verdict is a pass.
    pub fn passing_families(&self) -> Vec<TestId> {
        self.results
            .iter()
            .filter(|r| r.family_pass() == Some(true))
            .map(|r| r.id)
            .collect()
    }
}

/// Runs all fifteen tests.
pub fn run_suite(bits: &BitString, params: &SuiteParams) -> SuiteReport {
    let raw = bits.to_bit_bytes();
    SuiteReport {
        bit_len: raw.len(),
        results: TestId::ALL
            .iter()
            .map(|&id| run_test_raw(&raw, id, params))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_input_is_not_applicable_everywhere() {
        let bits: BitString = (0..50).map(|i| i % 2 == 0).collect();
        let report = run_suite(&bits, &SuiteParams::default());
        assert_eq!(report.results.len(), 15);
        for result in &report.results {
            assert!(
                !result.is_applicable(),
                "{:?} ran on a 50-bit input",
                result.id
            );
            assert_eq!(result.family_pass(), None);
        }
    }

    #[test]
    fn report_order_is_stable() {
        let bits: BitString = (0..200).map(|i| i % 3 == 0).collect();
        let report = run_suite(&bits, &SuiteParams::default());
        for (i, result) in report.results.iter().enumerate() {
            assert_eq!(result.id.number(), i + 1);
        }
        assert_eq!(report.result(TestId::Runs).id, TestId::Runs);
    }

    #[test]
    fn determinism() {
        let bits: BitString = (0..4096).map(|i| (i * 31 + 7) % 11 < 5).collect();
        let a = run_suite(&bits, &SuiteParams::default());
        let b = run_suite(&bits, &SuiteParams::default());
        assert_eq!(a, b);
    }

    #[test]
    fn family_pass_thresholds() {
        assert!(family_pass(&[0.5]));
        assert!(!family_pass(&[0.005]));
        assert!(!family_pass(&[]));
        // Two values: no failures tolerated.
        assert!(family_pass(&[0.02, 0.9]));
        assert!(!family_pass(&[0.005, 0.9]));
        // 148 values: up to five failures tolerated.
        let mut many = vec![0.5; 148];
        for slot in many.iter_mut().take(5) {
            *slot = 0.001;
        }
        assert!(family_pass(&many));
        many[5] = 0.001;
        assert!(!family_pass(&many));
    }

    #[test]
    fn all_p_values_stay_in_unit_interval() {
        for seed in 0..4u64 {
            let bits: BitString = (0..40_000)
                .map(|i| ((i as u64).wrapping_mul(seed * 2 + 1) * 2654435761 >> 13) & 1 == 1)
                .collect();
            let report = run_suite(&bits, &SuiteParams::default());
            for result in &report.results {
                for &p in &result.p_values {
                    assert!((0.0..=1.0).contains(&p), "{:?}: p = {p}", result.id);
                }
                assert_eq!(result.p_values.len(), result.labels.len());
            }
        }
    }
}
