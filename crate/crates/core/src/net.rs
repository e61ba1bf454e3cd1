//! Transports and the networked session loop.
//!
//! Two processes run the mutual-learning protocol in strict lockstep over any
//! reliable byte stream: the sender emits the round's input, both exchange
//! outputs, and every `probe_interval` rounds both exchange digests of their
//! canonical weight encoding to detect synchronization. The distilled secret
//! is computed locally on each side and never appears on the wire.

use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::distill::HashFn;
use crate::protocol::{default_max_rounds, generate_input, Session, SessionReport};
use crate::tpm::{InputVector, Role, TpmParams};
use crate::wire::{
    decode_message, encode_message, WireError, MAX_BODY_LEN, PROTOCOL_VERSION,
};

pub use crate::wire::{AbortReason, Message};

/// Default TCP port for the key agreement service.
pub const DEFAULT_PORT: u16 = 41717;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("transport failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("peer aborted: {0}")]
    Aborted(AbortReason),
    #[error("incompatible hello: {0}")]
    HelloMismatch(String),
    #[error("expected {expected} message, got {got}")]
    UnexpectedMessage {
        expected: &'static str,
        got: &'static str,
    },
    #[error("round desynchronization: expected {expected}, got {got}")]
    RoundDesync { expected: u32, got: u32 },
    #[error("synchronization not reached within {rounds} rounds")]
    MaxRounds { rounds: u64 },
    #[error("connection closed by peer")]
    ConnectionClosed,
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
}

/// A reliable, ordered message channel between the two parties.
pub trait Transport {
    fn send(&mut self, message: &Message) -> Result<(), NetError>;
    fn recv(&mut self) -> Result<Message, NetError>;
}

/// Framed messages over a TCP stream.
pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> std::io::Result<TcpTransport> {
        Ok(TcpTransport::from_stream(TcpStream::connect(addr)?)?)
    }

    /// Wraps an accepted or connected stream. Disables Nagle's algorithm:
    /// the protocol is strict request/response with tiny frames.
    pub fn from_stream(stream: TcpStream) -> std::io::Result<TcpTransport> {
        stream.set_nodelay(true)?;
        Ok(TcpTransport { stream })
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, message: &Message) -> Result<(), NetError> {
        let frame = encode_message(message)?;
        self.stream.write_all(&frame)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Message, NetError> {
        let mut header = [0u8; 5];
        read_exact_or_closed(&mut self.stream, &mut header)?;
        let len = u32::from_le_bytes(header[..4].try_into().unwrap());
        if len > MAX_BODY_LEN {
            return Err(WireError::Oversized(len).into());
        }
        let mut frame = vec![0u8; 5 + len as usize];
        frame[..5].copy_from_slice(&header);
        read_exact_or_closed(&mut self.stream, &mut frame[5..])?;
        Ok(decode_message(&frame)?)
    }
}

fn read_exact_or_closed<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<(), NetError> {
    match reader.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(NetError::ConnectionClosed),
        Err(e) => Err(e.into()),
    }
}

/// In-memory transport pair that still round-trips every frame through the
/// codec. Intended for tests and in-process experiments.
pub struct ChannelTransport {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
}

impl ChannelTransport {
    pub fn pair() -> (ChannelTransport, ChannelTransport) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        (
            ChannelTransport { tx: tx_a, rx: rx_a },
            ChannelTransport { tx: tx_b, rx: rx_b },
        )
    }
}

impl Transport for ChannelTransport {
    fn send(&mut self, message: &Message) -> Result<(), NetError> {
        let frame = encode_message(message)?;
        self.tx.send(frame).map_err(|_| NetError::ConnectionClosed)
    }

    fn recv(&mut self) -> Result<Message, NetError> {
        let frame = self.rx.recv().map_err(|_| NetError::ConnectionClosed)?;
        Ok(decode_message(&frame)?)
    }
}

/// Knobs for the networked loop.
#[derive(Debug, Clone, Copy)]
pub struct NetConfig {
    /// Digest exchange cadence, in rounds.
    pub probe_interval: u64,
    /// Round budget; `None` uses [`default_max_rounds`].
    pub max_rounds: Option<u64>,
    /// Hash for sync probes and the local distillation.
    pub hash: HashFn,
    pub session_id: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            probe_interval: 25,
            max_rounds: None,
            hash: HashFn::Sha256,
            session_id: 0,
        }
    }
}

fn message_name(m: &Message) -> &'static str {
    match m {
        Message::Hello { .. } => "hello",
        Message::Input { .. } => "input",
        Message::Output { .. } => "output",
        Message::SyncProbe { .. } => "sync-probe",
        Message::SyncConfirm { .. } => "sync-confirm",
        Message::Abort { .. } => "abort",
    }
}

fn abort<T: Transport>(transport: &mut T, reason: AbortReason) {
    // Best effort; the session is over either way.
    let _ = transport.send(&Message::Abort { reason });
}

fn recv_checked<T: Transport>(
    transport: &mut T,
    expected: &'static str,
) -> Result<Message, NetError> {
    let message = transport.recv()?;
    if let Message::Abort { reason } = message {
        return Err(NetError::Aborted(reason));
    }
    if message_name(&message) != expected {
        let got = message_name(&message);
        abort(transport, AbortReason::InvalidMessage);
        return Err(NetError::UnexpectedMessage { expected, got });
    }
    Ok(message)
}

fn check_round<T: Transport>(transport: &mut T, expected: u32, got: u32) -> Result<(), NetError> {
    if expected != got {
        abort(transport, AbortReason::RoundDesync);
        return Err(NetError::RoundDesync { expected, got });
    }
    Ok(())
}

/// Executes the key agreement over a transport.
///
/// The sender draws inputs from `input_seed`; the recipient takes them from
/// the wire, so `input_seed` is ignored on that side. Returns once both sides
/// confirmed matching weight digests, or with the error that ended the session.
pub fn run_remote_session<T: Transport>(
    transport: &mut T,
    params: &TpmParams,
    role: Role,
    weight_seed: u64,
    input_seed: u64,
    cfg: &NetConfig,
) -> Result<SessionReport, NetError> {
    transport.send(&Message::Hello {
        protocol_version: PROTOCOL_VERSION,
        params: *params,
        role,
        session_id: cfg.session_id,
    })?;
    let hello = recv_checked(transport, "hello")?;
    let Message::Hello {
        protocol_version,
        params: peer_params,
        role: peer_role,
        ..
    } = hello
    else {
        unreachable!("recv_checked returned a non-hello message");
    };
    if protocol_version != PROTOCOL_VERSION {
        abort(transport, AbortReason::VersionMismatch);
        return Err(NetError::HelloMismatch(format!(
            "peer speaks version {protocol_version}, this side speaks {PROTOCOL_VERSION}"
        )));
    }
    if peer_params != *params {
        abort(transport, AbortReason::ParamMismatch);
        return Err(NetError::HelloMismatch(
            "peer machine parameters differ".into(),
        ));
    }
    if peer_role != role.opposite() {
        abort(transport, AbortReason::RoleConflict);
        return Err(NetError::HelloMismatch(format!(
            "both sides claim the {role:?} role"
        )));
    }

    let mut session = Session::new(*params, role, weight_seed);
    let mut rng = ChaCha12Rng::seed_from_u64(input_seed);
    let max_rounds = cfg.max_rounds.unwrap_or_else(|| default_max_rounds(params));
    let max_rounds = max_rounds.min(u64::from(u32::MAX));

    for round in 1..=max_rounds {
        let wire_round = round as u32;
        let x = match role {
            Role::Sender => {
                let x = generate_input(params, &mut rng);
                transport.send(&Message::Input {
                    round: wire_round,
                    values: x.as_slice().to_vec(),
                })?;
                x
            }
            Role::Recipient => {
                let Message::Input { round: r, values } = recv_checked(transport, "input")? else {
                    unreachable!()
                };
                check_round(transport, wire_round, r)?;
                match InputVector::from_values(params, values) {
                    Ok(x) => x,
                    Err(_) => {
                        abort(transport, AbortReason::InvalidMessage);
                        return Err(NetError::UnexpectedMessage {
                            expected: "input conforming to the agreed parameters",
                            got: "input",
                        });
                    }
                }
            }
        };

        let (y, own_output) = session.evaluate(&x).expect("input shape already validated");
        transport.send(&Message::Output {
            round: wire_round,
            output: own_output,
        })?;
        let Message::Output {
            round: r,
            output: peer_output,
        } = recv_checked(transport, "output")?
        else {
            unreachable!()
        };
        check_round(transport, wire_round, r)?;
        session.complete_round(&x, &y, own_output, peer_output)?;

        if round % cfg.probe_interval == 0 {
            let digest = session.sync_digest(cfg.hash);
            transport.send(&Message::SyncProbe {
                round: wire_round,
                digest,
            })?;
            let Message::SyncProbe {
                round: r,
                digest: peer_digest,
            } = recv_checked(transport, "sync-probe")?
            else {
                unreachable!()
            };
            check_round(transport, wire_round, r)?;
            if digest == peer_digest {
                transport.send(&Message::SyncConfirm { round: wire_round })?;
                let Message::SyncConfirm { round: r } = recv_checked(transport, "sync-confirm")?
                else {
                    unreachable!()
                };
                check_round(transport, wire_round, r)?;
                session.mark_synchronized();
                return Ok(session.report(cfg.hash));
            }
        }
    }
    abort(transport, AbortReason::MaxRoundsExceeded);
    Err(NetError::MaxRounds { rounds: max_rounds })
}
