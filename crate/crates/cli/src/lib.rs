//! Batch experiment machinery behind the command-line front end.
//!
//! Everything here is deterministic in the master seed: per-session seeds are
//! drawn from one seeded generator, sessions run in index order, and streams
//! are concatenated in that order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use neurokey_core::bits::BitString;
use neurokey_core::distill::{distill_trace, encode_bits, DistillConfig, EncodingMode};
use neurokey_core::protocol::{run_session, SessionReport, SessionSeeds};
use neurokey_core::tpm::{Distribution, TpmParams};

/// One synchronized session pair.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub index: u64,
    pub sender: SessionReport,
    pub recipient: SessionReport,
}

/// Results of a batch of independent synchronizations.
#[derive(Debug, Clone)]
pub struct Batch {
    pub params: TpmParams,
    pub master_seed: u64,
    pub outcomes: Vec<SessionOutcome>,
    /// Indices of sessions that hit the round budget.
    pub failures: Vec<u64>,
}

/// Runs `sessions` independent synchronizations with seeds derived from the
/// master seed.
pub fn run_batch(params: &TpmParams, sessions: u64, master_seed: u64, max_rounds: u64) -> Batch {
    let mut seed_source = ChaCha12Rng::seed_from_u64(master_seed);
    let mut outcomes = Vec::with_capacity(sessions as usize);
    let mut failures = Vec::new();
    for index in 0..sessions {
        let seeds = SessionSeeds {
            sender_weights: seed_source.random(),
            recipient_weights: seed_source.random(),
            inputs: seed_source.random(),
        };
        match run_session(params, seeds, max_rounds) {
            Ok((sender, recipient)) => outcomes.push(SessionOutcome {
                index,
                sender,
                recipient,
            }),
            Err(_) => failures.push(index),
        }
    }
    Batch {
        params: *params,
        master_seed,
        outcomes,
        failures,
    }
}

impl Batch {
    pub fn mean_iterations(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().map(|o| o.sender.iterations as f64).sum::<f64>()
            / self.outcomes.len() as f64
    }

    /// Aggregate weight distribution over all synchronized final weights.
    pub fn distribution_before(&self) -> Distribution {
        Distribution::from_matrices(
            self.outcomes.iter().map(|o| &o.sender.final_weights),
            self.params.l(),
        )
        .expect("batch contains at least one session")
    }

    /// Aggregate distribution after running just the equalization pass on
    /// each session's weights.
    pub fn distribution_after_equalization(&self) -> Distribution {
        let mut all = Vec::new();
        for outcome in &self.outcomes {
            let eq = neurokey_core::distill::equalize(
                outcome.sender.final_weights.as_slice(),
                &self.params,
            )
            .expect("synchronized weights are in range");
            all.extend(eq);
        }
        Distribution::from_weights(&all, self.params.l()).expect("non-empty batch")
    }

    /// Baseline bitstream: zero-removed encoding of the raw synchronized
    /// weights, concatenated in session order.
    pub fn before_stream(&self) -> BitString {
        let mut bits = BitString::new();
        for outcome in &self.outcomes {
            let encoded = encode_bits(
                outcome.sender.final_weights.as_slice(),
                self.params.l(),
                EncodingMode::ZeroRemoved,
            )
            .expect("synchronized weights are in range");
            bits.extend_from(&encoded);
        }
        bits
    }

    /// Distilled secrets of every session, concatenated in session order.
    pub fn after_stream(&self, cfg: &DistillConfig) -> BitString {
        let mut bits = BitString::new();
        for outcome in &self.outcomes {
            let trace = distill_trace(&outcome.sender.final_weights, &self.params, cfg)
                .expect("synchronized weights distill");
            bits.extend_from(&trace.secret);
        }
        bits
    }
}

/// Rows of the distribution CSV written by the simulate command.
#[derive(Debug, Serialize)]
pub struct DistributionRow {
    pub weight_value: i16,
    pub p_before: f64,
    pub p_after: f64,
    pub uniform_reference: f64,
}

pub fn distribution_rows(before: &Distribution, after: &Distribution) -> Vec<DistributionRow> {
    let l = before.l();
    let uniform = 1.0 / (2.0 * f64::from(l) + 1.0);
    (-l..=l)
        .map(|v| DistributionRow {
            weight_value: v,
            p_before: before.prob(v),
            p_after: after.prob(v),
            uniform_reference: uniform,
        })
        .collect()
}

pub fn rows_to_csv(rows: &[DistributionRow]) -> String {
    let mut out = String::from("weight_value,p_before,p_after,uniform_reference\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.weight_value, row.p_before, row.p_after, row.uniform_reference
        ));
    }
    out
}
