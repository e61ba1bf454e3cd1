//! Statistical behavior of the mutual-learning loop at the evaluation scale.
//! Small batches here; the full 1000-session reproduction lives in the
//! acceptance suite.

use neurokey_core::distill::{distill, entropy, DistillConfig};
use neurokey_core::protocol::{default_max_rounds, run_session, SessionSeeds};
use neurokey_core::tpm::{Distribution, LearningRule, TpmParams};

fn batch(m: i16, sessions: u64, base_seed: u64) -> (f64, Distribution) {
    let params = TpmParams::new(3, 8, m, 60, LearningRule::Hebbian).unwrap();
    let mut iterations = 0u64;
    let mut matrices = Vec::new();
    for s in 0..sessions {
        let seeds = SessionSeeds {
            sender_weights: base_seed + 3 * s,
            recipient_weights: base_seed + 3 * s + 1,
            inputs: base_seed + 3 * s + 2,
        };
        let (ra, rb) =
            run_session(&params, seeds, default_max_rounds(&params)).expect("session syncs");
        assert_eq!(ra.final_weights, rb.final_weights);
        iterations += ra.iterations;
        matrices.push(ra.final_weights);
    }
    let dist = Distribution::from_matrices(matrices.iter(), 8).unwrap();
    (iterations as f64 / sessions as f64, dist)
}

#[test]
fn extrema_values_effect_appears_at_moderate_scale() {
    let (_, dist) = batch(1, 150, 9000);
    let mass = dist.extrema_mass();
    // Expect roughly 0.23; wide tolerance at this sample size.
    assert!(
        (0.18..=0.28).contains(&mass),
        "extrema mass {mass} out of range"
    );
    // Entropy is visibly below the uniform log2(17).
    let e = entropy(&dist);
    assert!(e < 4.05, "entropy {e}");
    assert!(e > 3.5, "entropy {e}");
}

#[test]
fn larger_input_bound_synchronizes_faster() {
    let (iters_m1, _) = batch(1, 60, 100);
    let (iters_m5, _) = batch(5, 60, 200);
    assert!(
        iters_m5 < iters_m1,
        "M=5 mean {iters_m5} not below M=1 mean {iters_m1}"
    );
}

#[test]
fn both_parties_distill_identical_secrets() {
    let params = TpmParams::new(3, 8, 1, 60, LearningRule::Hebbian).unwrap();
    let cfg = DistillConfig::default();
    for s in 0..25u64 {
        let seeds = SessionSeeds {
            sender_weights: 31 * s + 1,
            recipient_weights: 31 * s + 2,
            inputs: 31 * s + 3,
        };
        let (ra, rb) =
            run_session(&params, seeds, default_max_rounds(&params)).expect("session syncs");
        let sa = distill(&ra.final_weights, &params, &cfg).unwrap();
        let sb = distill(&rb.final_weights, &params, &cfg).unwrap();
        assert_eq!(sa, sb, "session {s} produced differing secrets");
        assert_eq!(sa.len() % 256, 0);
    }
}

#[test]
fn anti_hebbian_and_random_walk_also_synchronize() {
    for rule in [LearningRule::AntiHebbian, LearningRule::RandomWalk] {
        let params = TpmParams::new(3, 4, 1, 24, rule).unwrap();
        let seeds = SessionSeeds {
            sender_weights: 5,
            recipient_weights: 6,
            inputs: 7,
        };
        let (ra, rb) = run_session(&params, seeds, default_max_rounds(&params))
            .unwrap_or_else(|e| panic!("{rule:?} failed to synchronize: {e}"));
        assert_eq!(ra.final_weights, rb.final_weights);
    }
}
