//! Framed wire messages for the two-party key agreement.
//!
//! Frame layout: 4-byte little-endian body length, one message-type tag byte,
//! then the body. All integers are little-endian; input values travel as
//! signed 16-bit integers in row-major order. The encoding is bit-exact and
//! stable for a given protocol version.

use thiserror::Error;

use crate::tpm::{LearningRule, Role, TpmParams};

/// Version spoken by this implementation.
pub const PROTOCOL_VERSION: u16 = 1;

/// Largest body this implementation will read, as a denial-of-service guard.
pub const MAX_BODY_LEN: u32 = 1 << 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),
    #[error("truncated frame: need {expected} bytes, have {got}")]
    Truncated { expected: usize, got: usize },
    #[error("length mismatch: declared {declared} bytes, message uses {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("declared body of {0} bytes exceeds the frame limit")]
    Oversized(u32),
    #[error("invalid field: {0}")]
    InvalidValue(&'static str),
}

/// Why a session was torn down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    VersionMismatch,
    ParamMismatch,
    RoleConflict,
    RoundDesync,
    MaxRoundsExceeded,
    InvalidMessage,
    Shutdown,
}

impl AbortReason {
    fn to_byte(self) -> u8 {
        match self {
            AbortReason::VersionMismatch => 0,
            AbortReason::ParamMismatch => 1,
            AbortReason::RoleConflict => 2,
            AbortReason::RoundDesync => 3,
            AbortReason::MaxRoundsExceeded => 4,
            AbortReason::InvalidMessage => 5,
            AbortReason::Shutdown => 6,
        }
    }

    fn from_byte(b: u8) -> Result<AbortReason, WireError> {
        Ok(match b {
            0 => AbortReason::VersionMismatch,
            1 => AbortReason::ParamMismatch,
            2 => AbortReason::RoleConflict,
            3 => AbortReason::RoundDesync,
            4 => AbortReason::MaxRoundsExceeded,
            5 => AbortReason::InvalidMessage,
            6 => AbortReason::Shutdown,
            _ => return Err(WireError::InvalidValue("abort reason")),
        })
    }
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AbortReason::VersionMismatch => "protocol version mismatch",
            AbortReason::ParamMismatch => "parameter mismatch",
            AbortReason::RoleConflict => "role conflict",
            AbortReason::RoundDesync => "round desynchronization",
            AbortReason::MaxRoundsExceeded => "round budget exceeded",
            AbortReason::InvalidMessage => "invalid message",
            AbortReason::Shutdown => "shutdown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello {
        protocol_version: u16,
        params: TpmParams,
        role: Role,
        session_id: u64,
    },
    /// Public input for one round, sent only by the sender role.
    Input { round: u32, values: Vec<i16> },
    Output { round: u32, output: i8 },
    SyncProbe { round: u32, digest: [u8; 32] },
    SyncConfirm { round: u32 },
    Abort { reason: AbortReason },
}

const TAG_HELLO: u8 = 1;
const TAG_INPUT: u8 = 2;
const TAG_OUTPUT: u8 = 3;
const TAG_SYNC_PROBE: u8 = 4;
const TAG_SYNC_CONFIRM: u8 = 5;
const TAG_ABORT: u8 = 6;

fn rule_to_byte(rule: LearningRule) -> u8 {
    match rule {
        LearningRule::Hebbian => 0,
        LearningRule::AntiHebbian => 1,
        LearningRule::RandomWalk => 2,
    }
}

fn rule_from_byte(b: u8) -> Result<LearningRule, WireError> {
    Ok(match b {
        0 => LearningRule::Hebbian,
        1 => LearningRule::AntiHebbian,
        2 => LearningRule::RandomWalk,
        _ => return Err(WireError::InvalidValue("learning rule")),
    })
}

fn role_to_byte(role: Role) -> u8 {
    match role {
        Role::Sender => 0,
        Role::Recipient => 1,
    }
}

fn role_from_byte(b: u8) -> Result<Role, WireError> {
    Ok(match b {
        0 => Role::Sender,
        1 => Role::Recipient,
        _ => return Err(WireError::InvalidValue("role")),
    })
}

fn output_to_byte(o: i8) -> u8 {
    o as u8
}

fn output_from_byte(b: u8) -> Result<i8, WireError> {
    match b as i8 {
        1 => Ok(1),
        -1 => Ok(-1),
        _ => Err(WireError::InvalidValue("output must be +1 or -1")),
    }
}

/// Serializes a message into a complete frame.
pub fn encode_message(m: &Message) -> Result<Vec<u8>, WireError> {
    let (tag, body) = match m {
        Message::Hello {
            protocol_version,
            params,
            role,
            session_id,
        } => {
            let (k, l, mm, n) = params.wire_fields();
            let mut body = Vec::with_capacity(20);
            body.extend_from_slice(&protocol_version.to_le_bytes());
            body.extend_from_slice(&k.to_le_bytes());
            body.extend_from_slice(&l.to_le_bytes());
            body.extend_from_slice(&mm.to_le_bytes());
            body.extend_from_slice(&n.to_le_bytes());
            body.push(rule_to_byte(params.rule()));
            body.push(role_to_byte(*role));
            body.extend_from_slice(&session_id.to_le_bytes());
            (TAG_HELLO, body)
        }
        Message::Input { round, values } => {
            let mut body = Vec::with_capacity(4 + 2 * values.len());
            body.extend_from_slice(&round.to_le_bytes());
            for v in values {
                body.extend_from_slice(&v.to_le_bytes());
            }
            (TAG_INPUT, body)
        }
        Message::Output { round, output } => {
            let mut body = Vec::with_capacity(5);
            body.extend_from_slice(&round.to_le_bytes());
            body.push(output_to_byte(*output));
            (TAG_OUTPUT, body)
        }
        Message::SyncProbe { round, digest } => {
            let mut body = Vec::with_capacity(36);
            body.extend_from_slice(&round.to_le_bytes());
            body.extend_from_slice(digest);
            (TAG_SYNC_PROBE, body)
        }
        Message::SyncConfirm { round } => (TAG_SYNC_CONFIRM, round.to_le_bytes().to_vec()),
        Message::Abort { reason } => (TAG_ABORT, vec![reason.to_byte()]),
    };
    let len = u32::try_from(body.len()).map_err(|_| WireError::Oversized(u32::MAX))?;
    if len > MAX_BODY_LEN {
        return Err(WireError::Oversized(len));
    }
    let mut frame = Vec::with_capacity(5 + body.len());
    frame.extend_from_slice(&len.to_le_bytes());
    frame.push(tag);
    frame.extend_from_slice(&body);
    Ok(frame)
}

struct BodyReader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> BodyReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.pos + n > self.body.len() {
            return Err(WireError::Truncated {
                expected: self.pos + n,
                got: self.body.len(),
            });
        }
        let out = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn i16(&mut self) -> Result<i16, WireError> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn finish(&self) -> Result<(), WireError> {
        if self.pos != self.body.len() {
            return Err(WireError::LengthMismatch {
                declared: self.body.len(),
                actual: self.pos,
            });
        }
        Ok(())
    }
}

/// Parses one complete frame. Rejects unknown tags, truncated bodies, and
/// frames whose declared length disagrees with the message contents.
pub fn decode_message(frame: &[u8]) -> Result<Message, WireError> {
    if frame.len() < 5 {
        return Err(WireError::Truncated {
            expected: 5,
            got: frame.len(),
        });
    }
    let declared = u32::from_le_bytes(frame[..4].try_into().unwrap());
    if declared > MAX_BODY_LEN {
        return Err(WireError::Oversized(declared));
    }
    let declared = declared as usize;
    let tag = frame[4];
    let body = &frame[5..];
    if body.len() < declared {
        return Err(WireError::Truncated {
            expected: declared,
            got: body.len(),
        });
    }
    if body.len() > declared {
        return Err(WireError::LengthMismatch {
            declared,
            actual: body.len(),
        });
    }
    let mut r = BodyReader { body, pos: 0 };
    let message = match tag {
        TAG_HELLO => {
            let protocol_version = r.u16()?;
            let k = r.u16()?;
            let l = r.i16()?;
            let m = r.i16()?;
            let n = r.u16()?;
            let rule = rule_from_byte(r.u8()?)?;
            let role = role_from_byte(r.u8()?)?;
            let session_id = r.u64()?;
            let params = TpmParams::new_unguarded(k, l, m, n, rule)
                .map_err(|_| WireError::InvalidValue("machine parameters"))?;
            Message::Hello {
                protocol_version,
                params,
                role,
                session_id,
            }
        }
        TAG_INPUT => {
            let round = r.u32()?;
            let rest = body.len() - r.pos;
            if rest % 2 != 0 {
                return Err(WireError::LengthMismatch {
                    declared,
                    actual: r.pos + rest / 2 * 2,
                });
            }
            let mut values = Vec::with_capacity(rest / 2);
            for _ in 0..rest / 2 {
                values.push(r.i16()?);
            }
            Message::Input { round, values }
        }
        TAG_OUTPUT => {
            let round = r.u32()?;
            let output = output_from_byte(r.u8()?)?;
            Message::Output { round, output }
        }
        TAG_SYNC_PROBE => {
            let round = r.u32()?;
            let digest: [u8; 32] = r.take(32)?.try_into().unwrap();
            Message::SyncProbe { round, digest }
        }
        TAG_SYNC_CONFIRM => Message::SyncConfirm { round: r.u32()? },
        TAG_ABORT => Message::Abort {
            reason: AbortReason::from_byte(r.u8()?)?,
        },
        other => return Err(WireError::UnknownTag(other)),
    };
    r.finish()?;
    Ok(message)
}
