//! Key agreement by neural mutual learning, with key distillation.
//!
//! Two tree parity machines synchronize their bounded integer weights by
//! exchanging public inputs and binary outputs, then each side distills the
//! shared weight vector into uniform key material through equalization,
//! entropy-budgeted dropout, and hash substitution.
//!
//! - [`tpm`] — machine state, forward pass, learning rules
//! - [`protocol`] — the in-process mutual-learning loop
//! - [`distill`] — the three-phase key distillation pipeline
//! - [`bits`] — exact-length bit strings
//! - [`wire`] / [`net`] — framed messages and the two-party networked session

pub mod bits;
pub mod distill;
pub mod net;
pub mod protocol;
pub mod tpm;
pub mod wire;

pub use bits::BitString;
pub use distill::{distill, DistillConfig, HashFn};
pub use protocol::{run_session, Session, SessionReport, SessionSeeds};
pub use tpm::{InputVector, LearningRule, Role, TpmParams, WeightMatrix};
