//! One party's view of a session: framing, round tracking and accounting.

use std::time::Instant;

use super::frame::{Frame, FrameType, Phase};
use super::ledger::{lock, Direction, SharedLedger};
use super::transport::Transport;
use crate::error::{Error, Result};
use crate::mpc::PartyId;

pub struct Endpoint {
    party: PartyId,
    session: u32,
    transport: Box<dyn Transport>,
    ledger: SharedLedger,
    round: u32,
    phase: Phase,
    clock: Instant,
}

impl Endpoint {
    pub fn new(party: PartyId, session: u32, transport: Box<dyn Transport>, ledger: SharedLedger) -> Self {
        Self {
            party,
            session,
            transport,
            ledger,
            round: 0,
            phase: Phase::Handshake,
            clock: Instant::now(),
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn session(&self) -> u32 {
        self.session
    }

    /// Index of the next frame in the session; both parties count every
    /// frame, sent or received.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn ledger(&self) -> &SharedLedger {
        &self.ledger
    }

    /// Charges elapsed busy time to the current phase.
    pub fn flush(&mut self) {
        let now = Instant::now();
        lock(&self.ledger).add_time(self.phase, now - self.clock);
        self.clock = now;
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.flush();
        self.phase = phase;
    }

    /// Restarts the busy clock without charging the interval, e.g. after
    /// idling between requests.
    pub fn reset_clock(&mut self) {
        self.clock = Instant::now();
    }

    pub fn protocol_error(&self, msg: impl Into<String>) -> Error {
        Error::protocol(self.round, msg)
    }

    pub fn send(&mut self, frame_type: FrameType, payload: Vec<u8>) -> Result<()> {
        let frame = Frame {
            session: self.session,
            round: self.round,
            phase: self.phase,
            frame_type,
            payload,
        };
        let bytes = frame.encode()?;
        lock(&self.ledger).record(Direction::Sent, self.phase, frame_type, self.round, &bytes);
        self.round += 1;
        self.transport.send_bytes(bytes)
    }

    /// Receives one frame whose type must be in `allowed`.
    pub fn recv_any(&mut self, allowed: &[FrameType]) -> Result<Frame> {
        self.flush();
        let bytes = self.transport.recv_bytes()?;
        self.clock = Instant::now();
        let frame = Frame::decode(&bytes)?;
        if frame.session != self.session {
            return Err(self.protocol_error(format!(
                "frame for session {} on session {}",
                frame.session, self.session
            )));
        }
        if frame.round != self.round {
            return Err(self.protocol_error(format!(
                "desynchronized: expected round {}, peer sent round {}",
                self.round, frame.round
            )));
        }
        lock(&self.ledger).record(Direction::Received, frame.phase, frame.frame_type, frame.round, &bytes);
        self.round += 1;
        match frame.frame_type {
            FrameType::Error | FrameType::Reject => Err(Error::protocol(
                frame.round,
                format!("peer aborted: {}", String::from_utf8_lossy(&frame.payload)),
            )),
            t if allowed.contains(&t) => Ok(frame),
            t => Err(Error::protocol(
                frame.round,
                format!("unexpected {} frame, expected one of {:?}", t.name(), allowed),
            )),
        }
    }

    pub fn recv(&mut self, expected: FrameType) -> Result<Frame> {
        self.recv_any(&[expected])
    }

    /// Best-effort notice to the peer before abandoning the session.
    pub fn abort(&mut self, err: &Error) {
        let _ = self.send(FrameType::Error, err.to_string().into_bytes());
    }
}
