//! Public session parameters and the opening handshake.

use std::time::Duration;

use super::endpoint::Endpoint;
use super::frame::FrameType;
use crate::error::{Error, Result};
use crate::he::HeParams;
use crate::joint::Backend;
use crate::mpc::DEFAULT_FRAC_BITS;
use crate::util::fnv1a64;

pub const PROTOCOL_VERSION: u32 = 1;

/// Parameters both parties must agree on before any data flows.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub backend: Backend,
    pub session_id: u32,
    /// Public seed from which dealer streams are derived.
    pub seed: u64,
    pub frac_bits: u32,
    pub he: HeParams,
    /// Packing block for the rotate-and-sum backend.
    pub block: usize,
    pub bins_t: usize,
    /// Grid dimensions of every pyramid level.
    pub level_dims: Vec<Vec<usize>>,
    pub keep_transcript: bool,
    pub timeout: Duration,
}

impl SessionConfig {
    pub fn new(backend: Backend, level_dims: Vec<Vec<usize>>) -> Self {
        Self {
            backend,
            session_id: 1,
            seed: 0,
            frac_bits: DEFAULT_FRAC_BITS,
            he: HeParams::default(),
            block: 256,
            bins_t: 32,
            level_dims,
            keep_transcript: false,
            timeout: Duration::from_secs(600),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.backend, Backend::FheV1 | Backend::FheV2) {
            self.he.validate()?;
            if !self.block.is_power_of_two() || self.block > self.he.slots() {
                return Err(Error::Config(format!(
                    "block {} must be a power of two no larger than {} slots",
                    self.block,
                    self.he.slots()
                )));
            }
        }
        if self.level_dims.is_empty() {
            return Err(Error::Config("session without pyramid levels".into()));
        }
        Ok(())
    }

    pub fn level_len(&self, level: usize) -> Result<usize> {
        self.level_dims.get(level).map(|d| d.iter().product()).ok_or_else(|| {
            Error::arg(format!(
                "level {level} outside the session's {} levels",
                self.level_dims.len()
            ))
        })
    }

    fn layout_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        for dims in &self.level_dims {
            bytes.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for &d in dims {
                bytes.extend_from_slice(&(d as u64).to_le_bytes());
            }
        }
        fnv1a64(&bytes)
    }

    fn hello(&self) -> Hello {
        Hello {
            version: PROTOCOL_VERSION,
            backend: self.backend.code(),
            frac_bits: self.frac_bits,
            ring_degree: self.he.ring_degree as u32,
            block: self.block as u32,
            bins_t: self.bins_t as u32,
            he_hash: self.he.hash(),
            layout_hash: self.layout_hash(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Hello {
    version: u32,
    backend: u8,
    frac_bits: u32,
    ring_degree: u32,
    block: u32,
    bins_t: u32,
    he_hash: u64,
    layout_hash: u64,
    seed: u64,
}

const HELLO_LEN: usize = 45;

impl Hello {
    fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HELLO_LEN);
        b.extend_from_slice(&self.version.to_le_bytes());
        b.push(self.backend);
        b.extend_from_slice(&self.frac_bits.to_le_bytes());
        b.extend_from_slice(&self.ring_degree.to_le_bytes());
        b.extend_from_slice(&self.block.to_le_bytes());
        b.extend_from_slice(&self.bins_t.to_le_bytes());
        b.extend_from_slice(&self.he_hash.to_le_bytes());
        b.extend_from_slice(&self.layout_hash.to_le_bytes());
        b.extend_from_slice(&self.seed.to_le_bytes());
        b
    }

    fn decode(b: &[u8]) -> Result<Self> {
        if b.len() != HELLO_LEN {
            return Err(Error::parse(
                "hello",
                format!("{} bytes, expected {HELLO_LEN}", b.len()),
            ));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        Ok(Self {
            version: u32_at(0),
            backend: b[4],
            frac_bits: u32_at(5),
            ring_degree: u32_at(9),
            block: u32_at(13),
            bins_t: u32_at(17),
            he_hash: u64_at(21),
            layout_hash: u64_at(29),
            seed: u64_at(37),
        })
    }

    /// First disagreeing field as `(name, ours, theirs)`.
    fn mismatch(&self, peer: &Hello) -> Option<(&'static str, String, String)> {
        let pairs: [(&str, u64, u64); 9] = [
            ("protocol version", self.version as u64, peer.version as u64),
            ("backend", self.backend as u64, peer.backend as u64),
            ("fractional bits", self.frac_bits as u64, peer.frac_bits as u64),
            ("ring degree", self.ring_degree as u64, peer.ring_degree as u64),
            ("packing block", self.block as u64, peer.block as u64),
            ("target bins", self.bins_t as u64, peer.bins_t as u64),
            ("encryption parameter hash", self.he_hash, peer.he_hash),
            ("pyramid layout hash", self.layout_hash, peer.layout_hash),
            ("session seed", self.seed, peer.seed),
        ];
        pairs
            .into_iter()
            .find(|(_, a, b)| a != b)
            .map(|(n, a, b)| (n, a.to_string(), b.to_string()))
    }
}

/// Party 1 side: sends its parameters and waits for acceptance.
pub fn handshake_initiator(ep: &mut Endpoint, cfg: &SessionConfig) -> Result<()> {
    ep.send(FrameType::Hello, cfg.hello().encode())?;
    ep.recv(FrameType::HelloAck)?;
    Ok(())
}

/// Party 2 side: checks the peer's parameters against its own.
pub fn handshake_responder(ep: &mut Endpoint, cfg: &SessionConfig) -> Result<()> {
    let frame = ep.recv(FrameType::Hello)?;
    let peer = Hello::decode(&frame.payload)?;
    let ours = cfg.hello();
    if let Some((field, a, b)) = ours.mismatch(&peer) {
        let msg = format!("{field} mismatch: party 2 has {a}, party 1 has {b}");
        let _ = ep.send(FrameType::Reject, msg.clone().into_bytes());
        return Err(ep.protocol_error(msg));
    }
    ep.send(FrameType::HelloAck, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_round_trip_and_mismatch() {
        let cfg = SessionConfig::new(Backend::Mpc, vec![vec![16, 16]]);
        let h = cfg.hello();
        assert_eq!(Hello::decode(&h.encode()).unwrap(), h);
        let mut other = cfg.clone();
        other.he = HeParams::with_degree(2048);
        let (field, a, b) = h.mismatch(&other.hello()).unwrap();
        assert_eq!(field, "ring degree");
        assert_eq!((a.as_str(), b.as_str()), ("4096", "2048"));
    }
}
