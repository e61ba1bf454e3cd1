//! Codec round-trip and malformed-frame properties.

use proptest::prelude::*;

use neurokey_core::tpm::{LearningRule, Role, TpmParams};
use neurokey_core::wire::{decode_message, encode_message, AbortReason, Message, WireError};

fn rule_strategy() -> impl Strategy<Value = LearningRule> {
    prop_oneof![
        Just(LearningRule::Hebbian),
        Just(LearningRule::AntiHebbian),
        Just(LearningRule::RandomWalk),
    ]
}

fn role_strategy() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::Sender), Just(Role::Recipient)]
}

fn reason_strategy() -> impl Strategy<Value = AbortReason> {
    prop_oneof![
        Just(AbortReason::VersionMismatch),
        Just(AbortReason::ParamMismatch),
        Just(AbortReason::RoleConflict),
        Just(AbortReason::RoundDesync),
        Just(AbortReason::MaxRoundsExceeded),
        Just(AbortReason::InvalidMessage),
        Just(AbortReason::Shutdown),
    ]
}

fn message_strategy() -> impl Strategy<Value = Message> {
    prop_oneof![
        (
            any::<u16>(),
            1u16..=64,
            1i16..=256,
            1u16..=64,
            rule_strategy(),
            role_strategy(),
            any::<u64>()
        )
            .prop_map(|(version, k, l, n, rule, role, session_id)| {
                let m = 1 + (l - 1) / 2;
                Message::Hello {
                    protocol_version: version,
                    params: TpmParams::new(k, l, m, n, rule).unwrap(),
                    role,
                    session_id,
                }
            }),
        (any::<u32>(), proptest::collection::vec(any::<i16>(), 0..400))
            .prop_map(|(round, values)| Message::Input { round, values }),
        (any::<u32>(), prop_oneof![Just(1i8), Just(-1i8)])
            .prop_map(|(round, output)| Message::Output { round, output }),
        (any::<u32>(), any::<[u8; 32]>())
            .prop_map(|(round, digest)| Message::SyncProbe { round, digest }),
        any::<u32>().prop_map(|round| Message::SyncConfirm { round }),
        reason_strategy().prop_map(|reason| Message::Abort { reason }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn encode_decode_identity(message in message_strategy()) {
        let frame = encode_message(&message).unwrap();
        let back = decode_message(&frame).unwrap();
        prop_assert_eq!(back, message);
    }

    #[test]
    fn truncation_is_always_rejected(message in message_strategy(), cut in 1usize..16) {
        let frame = encode_message(&message).unwrap();
        let cut = cut.min(frame.len());
        let out = decode_message(&frame[..frame.len() - cut]);
        let truncated = matches!(out, Err(WireError::Truncated { .. }));
        prop_assert!(truncated, "got {:?}", out);
    }

    #[test]
    fn trailing_garbage_is_always_rejected(message in message_strategy(), extra in 1usize..8) {
        let mut frame = encode_message(&message).unwrap();
        frame.extend(std::iter::repeat_n(0xAB, extra));
        let out = decode_message(&frame);
        let mismatched = matches!(out, Err(WireError::LengthMismatch { .. }));
        prop_assert!(mismatched, "got {:?}", out);
    }
}

#[test]
fn all_unknown_tags_rejected() {
    for tag in 0u8..=255 {
        let frame = vec![0, 0, 0, 0, tag];
        let out = decode_message(&frame);
        if (1..=6).contains(&tag) {
            // Known tag, but the empty body cannot hold the message.
            assert!(
                matches!(out, Err(WireError::Truncated { .. })),
                "tag {tag}: {out:?}"
            );
        } else {
            assert_eq!(out, Err(WireError::UnknownTag(tag)));
        }
    }
}
