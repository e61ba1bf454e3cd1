//! End-to-end networked sessions over in-memory channels and real sockets.

use std::net::{TcpListener, TcpStream};
use std::thread;

use neurokey_core::distill::{distill, DistillConfig};
use neurokey_core::net::{
    run_remote_session, ChannelTransport, Message, NetConfig, NetError, TcpTransport, Transport,
};
use neurokey_core::protocol::SessionReport;
use neurokey_core::tpm::{LearningRule, Role, TpmParams};
use neurokey_core::wire::{AbortReason, PROTOCOL_VERSION};

fn params(m: i16) -> TpmParams {
    TpmParams::new(3, 8, m, 60, LearningRule::Hebbian).unwrap()
}

fn run_pair(
    p_sender: TpmParams,
    p_recipient: TpmParams,
    seeds: (u64, u64, u64),
) -> (
    Result<SessionReport, NetError>,
    Result<SessionReport, NetError>,
) {
    let (mut ta, mut tb) = ChannelTransport::pair();
    let cfg = NetConfig::default();
    let sender = thread::spawn(move || {
        run_remote_session(&mut ta, &p_sender, Role::Sender, seeds.0, seeds.2, &cfg)
    });
    let recipient = thread::spawn(move || {
        run_remote_session(&mut tb, &p_recipient, Role::Recipient, seeds.1, 0, &cfg)
    });
    (sender.join().unwrap(), recipient.join().unwrap())
}

#[test]
fn channel_session_synchronizes_with_identical_secrets() {
    let p = params(1);
    let (ra, rb) = run_pair(p, p, (10, 20, 30));
    let (ra, rb) = (ra.unwrap(), rb.unwrap());
    assert_eq!(ra.final_weights, rb.final_weights);
    assert_eq!(ra.sync_digest, rb.sync_digest);
    let cfg = DistillConfig::default();
    let sa = distill(&ra.final_weights, &p, &cfg).unwrap();
    let sb = distill(&rb.final_weights, &p, &cfg).unwrap();
    assert_eq!(sa, sb);
    assert!(!sa.is_empty());
    // The networked loop detects sync at the next probe, so the round count
    // lands on the probe cadence.
    assert_eq!(ra.iterations % 25, 0);
}

#[test]
fn tcp_session_synchronizes() {
    let p = params(3);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let cfg = NetConfig::default();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut transport = TcpTransport::from_stream(stream).unwrap();
        run_remote_session(&mut transport, &p, Role::Recipient, 77, 0, &cfg)
    });
    let mut transport = TcpTransport::from_stream(TcpStream::connect(addr).unwrap()).unwrap();
    let ra = run_remote_session(&mut transport, &p, Role::Sender, 66, 88, &cfg).unwrap();
    let rb = server.join().unwrap().unwrap();
    assert_eq!(ra.final_weights, rb.final_weights);
    assert_eq!(ra.sync_digest, rb.sync_digest);
}

#[test]
fn mismatched_parameters_abort_at_hello() {
    let (ra, rb) = run_pair(params(1), params(3), (1, 2, 3));
    for outcome in [ra, rb] {
        match outcome {
            Err(NetError::HelloMismatch(_)) | Err(NetError::Aborted(AbortReason::ParamMismatch)) => {}
            other => panic!("expected hello failure, got {other:?}"),
        }
    }
}

#[test]
fn same_role_on_both_sides_aborts() {
    let p = params(1);
    let (mut ta, mut tb) = ChannelTransport::pair();
    let cfg = NetConfig::default();
    let a = thread::spawn(move || {
        run_remote_session(&mut ta, &p, Role::Sender, 1, 2, &cfg)
    });
    let b = thread::spawn(move || {
        run_remote_session(&mut tb, &p, Role::Sender, 3, 4, &cfg)
    });
    for outcome in [a.join().unwrap(), b.join().unwrap()] {
        match outcome {
            Err(NetError::HelloMismatch(_)) | Err(NetError::Aborted(AbortReason::RoleConflict)) => {}
            other => panic!("expected role conflict, got {other:?}"),
        }
    }
}

#[test]
fn version_mismatch_gets_abort_reply() {
    let p = params(1);
    let (mut ours, mut theirs) = ChannelTransport::pair();
    let handle = thread::spawn(move || {
        run_remote_session(&mut theirs, &p, Role::Recipient, 5, 0, &NetConfig::default())
    });
    ours.send(&Message::Hello {
        protocol_version: PROTOCOL_VERSION + 1,
        params: p,
        role: Role::Sender,
        session_id: 0,
    })
    .unwrap();
    // The peer sends its own hello, then rejects ours.
    let hello = ours.recv().unwrap();
    assert!(matches!(hello, Message::Hello { .. }));
    let reply = ours.recv().unwrap();
    assert_eq!(
        reply,
        Message::Abort {
            reason: AbortReason::VersionMismatch
        }
    );
    assert!(matches!(
        handle.join().unwrap(),
        Err(NetError::HelloMismatch(_))
    ));
}

#[test]
fn transport_drop_mid_session_fails_without_secret() {
    let p = params(1);
    let (mut ta, mut tb) = ChannelTransport::pair();
    let cfg = NetConfig::default();
    let survivor = thread::spawn(move || {
        run_remote_session(&mut ta, &p, Role::Sender, 9, 8, &cfg)
    });
    // Play along for a few rounds, then vanish.
    let _ = tb.recv(); // hello
    tb.send(&Message::Hello {
        protocol_version: PROTOCOL_VERSION,
        params: p,
        role: Role::Recipient,
        session_id: 0,
    })
    .unwrap();
    for round in 1..=3u32 {
        let input = tb.recv().unwrap();
        assert!(matches!(input, Message::Input { .. }));
        let output = tb.recv().unwrap();
        let Message::Output { .. } = output else {
            panic!("expected output");
        };
        tb.send(&Message::Output { round, output: 1 }).unwrap();
    }
    drop(tb);
    match survivor.join().unwrap() {
        Err(NetError::ConnectionClosed) | Err(NetError::Io(_)) => {}
        other => panic!("expected connection failure, got {other:?}"),
    }
}

/// Transport wrapper recording every message that crossed it.
struct Recording<T: Transport> {
    inner: T,
    sent: Vec<Message>,
    received: Vec<Message>,
}

impl<T: Transport> Transport for Recording<T> {
    fn send(&mut self, message: &Message) -> Result<(), NetError> {
        self.sent.push(message.clone());
        self.inner.send(message)
    }

    fn recv(&mut self) -> Result<Message, NetError> {
        let message = self.inner.recv()?;
        self.received.push(message.clone());
        Ok(message)
    }
}

/// Replays a recorded peer transcript; sends are checked against the record.
struct Replay {
    expect_sent: std::vec::IntoIter<Message>,
    to_receive: std::vec::IntoIter<Message>,
}

impl Transport for Replay {
    fn send(&mut self, message: &Message) -> Result<(), NetError> {
        let expected = self.expect_sent.next().expect("unexpected extra send");
        assert_eq!(*message, expected, "replayed session diverged on send");
        Ok(())
    }

    fn recv(&mut self) -> Result<Message, NetError> {
        self.to_receive.next().ok_or(NetError::ConnectionClosed)
    }
}

#[test]
fn recorded_transcript_replays_to_the_same_final_state() {
    let p = params(1);
    let (ta, tb) = ChannelTransport::pair();
    let cfg = NetConfig::default();
    let mut recording = Recording {
        inner: ta,
        sent: Vec::new(),
        received: Vec::new(),
    };
    let peer = thread::spawn(move || {
        let mut tb = tb;
        run_remote_session(&mut tb, &p, Role::Recipient, 52, 0, &NetConfig::default())
    });
    let live = run_remote_session(&mut recording, &p, Role::Sender, 51, 53, &cfg).unwrap();
    peer.join().unwrap().unwrap();

    let mut replay = Replay {
        expect_sent: recording.sent.into_iter(),
        to_receive: recording.received.into_iter(),
    };
    let replayed = run_remote_session(&mut replay, &p, Role::Sender, 51, 53, &cfg).unwrap();
    assert_eq!(replayed, live);
}
