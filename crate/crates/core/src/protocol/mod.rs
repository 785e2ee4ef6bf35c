//! Two-party sessions: framing, transports, accounting and the secure
//! backends of the joint products.

mod client;
mod endpoint;
mod fhe;
mod fhe_v1;
mod fhe_v2;
pub mod frame;
pub mod ledger;
mod mpc;
pub mod request;
mod service;
pub mod session;
pub mod transport;

use std::net::TcpListener;
use std::thread::JoinHandle;

pub use client::{mpc_error_bound, row_scales, SecureJoint, MPC_ROW_L1_CAP};
pub use endpoint::Endpoint;
pub use fhe::MASK_BOUND;
pub use fhe_v2::halves;
pub use frame::{Frame, FrameType, Phase};
pub use ledger::{ledger_report, lock, shared_ledger, Direction, FrameRecord, Ledger, PhaseStats, SharedLedger};
pub use mpc::dealer_seed;
pub use service::Party2Service;
pub use session::SessionConfig;
pub use transport::{loopback_pair, LoopbackTransport, TcpTransport, Transport};

use crate::error::{Error, Result};
use crate::joint::TargetSide;

/// How the two in-process parties are connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportKind {
    Loopback,
    /// TCP on the given local address; port 0 picks a free one.
    Tcp(String),
}

impl std::str::FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loopback" => Ok(Self::Loopback),
            "tcp" => Ok(Self::Tcp("127.0.0.1:0".into())),
            other => match other.strip_prefix("tcp:") {
                Some(addr) => Ok(Self::Tcp(addr.into())),
                None => Err(Error::Config(format!("unknown transport {other:?}"))),
            },
        }
    }
}

/// Party 1's handle plus the thread running party 2.
pub struct Session {
    pub joint: SecureJoint,
    pub party2: JoinHandle<Result<()>>,
}

impl Session {
    /// Closes the session and waits for party 2.
    pub fn finish(mut self) -> Result<Ledger> {
        self.joint.close()?;
        let peer = self.joint.peer_ledger().cloned();
        drop(self.joint);
        self.party2
            .join()
            .map_err(|_| Error::Transport("party 2 thread panicked".into()))??;
        Ok(peer.map(|l| lock(&l).clone()).unwrap_or_default())
    }
}

/// Starts party 2 on its own thread and connects party 1 to it.
pub fn spawn_session(
    cfg: SessionConfig,
    target: TargetSide,
    kind: &TransportKind,
    crypto_seed: u64,
) -> Result<Session> {
    let ledger1 = shared_ledger(cfg.keep_transcript);
    let ledger2 = shared_ledger(cfg.keep_transcript);
    let cfg2 = cfg.clone();
    let l2 = ledger2.clone();
    let (client_transport, party2): (Box<dyn Transport>, JoinHandle<Result<()>>) = match kind {
        TransportKind::Loopback => {
            let (a, b) = loopback_pair(cfg.timeout);
            let handle = std::thread::spawn(move || Party2Service::new(Box::new(b), cfg2, target, l2).run(crypto_seed));
            (Box::new(a), handle)
        }
        TransportKind::Tcp(addr) => {
            let listener = TcpListener::bind(addr).map_err(|e| Error::Transport(format!("bind {addr}: {e}")))?;
            let local = listener
                .local_addr()
                .map_err(|e| Error::Transport(format!("local address: {e}")))?;
            let timeout = cfg.timeout;
            let handle = std::thread::spawn(move || {
                let t = TcpTransport::accept(&listener, timeout)?;
                Party2Service::new(Box::new(t), cfg2, target, l2).run(crypto_seed)
            });
            (Box::new(TcpTransport::connect(local, cfg.timeout)?), handle)
        }
    };
    match SecureJoint::connect(client_transport, cfg, ledger1, Some(ledger2), crypto_seed) {
        Ok(joint) => Ok(Session { joint, party2 }),
        Err(e) => {
            // Party 2's own error usually names the cause more precisely.
            let peer = party2.join().ok().and_then(|r| r.err());
            Err(peer.unwrap_or(e))
        }
    }
}
