// Temporary development probe; deleted before release.
use neurokey_core::distill::{encode_bits, entropy, equalize, EncodingMode};
use neurokey_core::protocol::{default_max_rounds, run_session, SessionSeeds};
use neurokey_core::tpm::{Distribution, LearningRule, TpmParams};

fn main() {
    let sessions = 1000u64;
    for m in [1i16, 3, 5] {
        let params = TpmParams::new(3, 8, m, 60, LearningRule::Hebbian).unwrap();
        let mut iter_sum = 0u64;
        let mut all_weights: Vec<i16> = Vec::new();
        let mut all_eq: Vec<i16> = Vec::new();
        let mut ones = 0usize;
        let mut total_bits = 0usize;
        let mut failed = 0u32;
        for s in 0..sessions {
            let seeds = SessionSeeds {
                sender_weights: 1_000_000 * m as u64 + 3 * s,
                recipient_weights: 1_000_000 * m as u64 + 3 * s + 1,
                inputs: 1_000_000 * m as u64 + 3 * s + 2,
            };
            match run_session(&params, seeds, default_max_rounds(&params)) {
                Ok((ra, _rb)) => {
                    iter_sum += ra.iterations;
                    all_weights.extend_from_slice(ra.final_weights.as_slice());
                    all_eq.extend(equalize(ra.final_weights.as_slice(), &params).unwrap());
                    let bits =
                        encode_bits(ra.final_weights.as_slice(), 8, EncodingMode::ZeroRemoved)
                            .unwrap();
                    ones += bits.ones();
                    total_bits += bits.len();
                }
                Err(_) => failed += 1,
            }
        }
        let dist = Distribution::from_weights(&all_weights, 8).unwrap();
        let eq_dist = Distribution::from_weights(&all_eq, 8).unwrap();
        let n = total_bits as f64;
        let s_n = 2.0 * ones as f64 - n;
        let z = s_n / n.sqrt();
        println!(
            "M={m}: failed={failed} mean_iters={:.1} extrema={:.4} pre_entropy={:.4} eq_maxdev={:.5} bits={} ones_frac={:.5} monobit_z={:.2}",
            iter_sum as f64 / (sessions - failed as u64) as f64,
            dist.extrema_mass(),
            entropy(&dist),
            eq_dist.max_uniform_deviation(),
            total_bits,
            ones as f64 / n,
            z
        );
        // per-value distribution
        let probs: Vec<String> = dist.probs().map(|(v, p)| format!("{v}:{p:.4}")).collect();
        println!("  before: {}", probs.join(" "));
        let probs: Vec<String> = eq_dist.probs().map(|(v, p)| format!("{v}:{p:.4}")).collect();
        println!("  after:  {}", probs.join(" "));
    }
}
