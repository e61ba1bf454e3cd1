//! The four-step mutual-learning loop between two machines.
//!
//! One party (the sender) generates a public input each round; both compute
//! their outputs, exchange them, and apply the learning rule only when the
//! outputs match. Rounds repeat until both weight matrices coincide.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distill::{weight_digest32, HashFn};
use crate::tpm::{
    apply_update, hidden_outputs, tpm_output, HiddenOutputs, InputVector, Role, TpmError,
    TpmParams, WeightMatrix,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("sessions have mismatched parameters")]
    ParamMismatch,
    #[error("sessions must hold opposite roles")]
    RoleConflict,
    #[error("session is no longer learning")]
    Terminated,
    #[error("synchronization not reached within {rounds} rounds")]
    SyncTimeout { rounds: u64 },
    #[error(transparent)]
    Tpm(#[from] TpmError),
}

/// Default round budget before a session is declared failed.
pub fn default_max_rounds(params: &TpmParams) -> u64 {
    10_000 * params.k() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Learning,
    Synchronized,
    Failed,
}

/// One party's state over the life of a key agreement.
#[derive(Debug, Clone)]
pub struct Session {
    params: TpmParams,
    role: Role,
    weights: WeightMatrix,
    round: u64,
    updates: u64,
    consecutive_agreements: u64,
    status: SessionStatus,
}

impl Session {
    /// Fresh session with weights drawn from `seed`.
    pub fn new(params: TpmParams, role: Role, seed: u64) -> Session {
        let weights = WeightMatrix::random(&params, seed);
        Session {
            params,
            role,
            weights,
            round: 0,
            updates: 0,
            consecutive_agreements: 0,
            status: SessionStatus::Learning,
        }
    }

    pub fn from_weights(
        params: TpmParams,
        role: Role,
        weights: WeightMatrix,
    ) -> Result<Session, ProtocolError> {
        let weights = WeightMatrix::from_values(&params, weights.as_slice().to_vec())?;
        Ok(Session {
            params,
            role,
            weights,
            round: 0,
            updates: 0,
            consecutive_agreements: 0,
            status: SessionStatus::Learning,
        })
    }

    pub fn params(&self) -> &TpmParams {
        &self.params
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn consecutive_agreements(&self) -> u64 {
        self.consecutive_agreements
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Forward pass for this round's shared input.
    pub fn evaluate(&self, x: &InputVector) -> Result<(HiddenOutputs, i8), TpmError> {
        let y = hidden_outputs(&self.weights, x, self.role)?;
        let o = tpm_output(&y);
        Ok((y, o))
    }

    /// Advances one round given both outputs; updates weights on agreement.
    pub fn complete_round(
        &mut self,
        x: &InputVector,
        y: &HiddenOutputs,
        own_output: i8,
        peer_output: i8,
    ) -> Result<RoundResult, ProtocolError> {
        if self.status != SessionStatus::Learning {
            return Err(ProtocolError::Terminated);
        }
        let updated = own_output == peer_output;
        if updated {
            apply_update(
                &mut self.weights,
                x,
                y,
                own_output,
                self.params.rule(),
                self.params.l(),
            )?;
            self.updates += 1;
            self.consecutive_agreements += 1;
        } else {
            self.consecutive_agreements = 0;
        }
        self.round += 1;
        Ok(RoundResult {
            input: x.clone(),
            output_self: own_output,
            output_peer: peer_output,
            updated,
        })
    }

    /// Digest of the canonical weight encoding, exchanged to detect
    /// synchronization over a public channel.
    pub fn sync_digest(&self, hash: HashFn) -> [u8; 32] {
        weight_digest32(&self.weights, self.params.l(), hash)
    }

    pub fn mark_synchronized(&mut self) {
        self.status = SessionStatus::Synchronized;
    }

    pub fn mark_failed(&mut self) {
        self.status = SessionStatus::Failed;
    }

    /// Summary of the completed session.
    pub fn report(&self, hash: HashFn) -> SessionReport {
        SessionReport {
            iterations: self.round,
            updates: self.updates,
            final_weights: self.weights.clone(),
            sync_digest: self.sync_digest(hash),
        }
    }
}

/// Outcome of a single round as seen by one party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    pub input: InputVector,
    pub output_self: i8,
    pub output_peer: i8,
    pub updated: bool,
}

/// Per-synchronization record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub iterations: u64,
    pub updates: u64,
    pub final_weights: WeightMatrix,
    pub sync_digest: [u8; 32],
}

/// Seeds pinning down a whole in-process session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSeeds {
    pub sender_weights: u64,
    pub recipient_weights: u64,
    pub inputs: u64,
}

/// Draws the next public input vector. The sender owns the generator.
pub fn generate_input(params: &TpmParams, rng: &mut impl Rng) -> InputVector {
    InputVector::random(params, rng)
}

/// Runs one round for an in-process pair on a shared input.
pub fn run_round(
    a: &mut Session,
    b: &mut Session,
    x: &InputVector,
) -> Result<(RoundResult, RoundResult), ProtocolError> {
    if a.params != b.params {
        return Err(ProtocolError::ParamMismatch);
    }
    if a.role == b.role {
        return Err(ProtocolError::RoleConflict);
    }
    if a.status != SessionStatus::Learning || b.status != SessionStatus::Learning {
        return Err(ProtocolError::Terminated);
    }
    let (ya, oa) = a.evaluate(x)?;
    let (yb, ob) = b.evaluate(x)?;
    let ra = a.complete_round(x, &ya, oa, ob)?;
    let rb = b.complete_round(x, &yb, ob, oa)?;
    Ok((ra, rb))
}

/// Full synchronization means identical canonical encodings; for in-process
/// sessions that is entry-for-entry weight equality.
pub fn check_sync(a: &Session, b: &Session) -> bool {
    a.weights == b.weights
}

/// Runs a full in-process session to synchronization or `max_rounds`.
pub fn run_session(
    params: &TpmParams,
    seeds: SessionSeeds,
    max_rounds: u64,
) -> Result<(SessionReport, SessionReport), ProtocolError> {
    let mut sender = Session::new(*params, Role::Sender, seeds.sender_weights);
    let mut recipient = Session::new(*params, Role::Recipient, seeds.recipient_weights);
    let mut rng = ChaCha12Rng::seed_from_u64(seeds.inputs);
    for _ in 0..max_rounds {
        let x = generate_input(params, &mut rng);
        run_round(&mut sender, &mut recipient, &x)?;
        if check_sync(&sender, &recipient) {
            sender.mark_synchronized();
            recipient.mark_synchronized();
            return Ok((
                sender.report(HashFn::Sha256),
                recipient.report(HashFn::Sha256),
            ));
        }
    }
    sender.mark_failed();
    recipient.mark_failed();
    Err(ProtocolError::SyncTimeout { rounds: max_rounds })
}
