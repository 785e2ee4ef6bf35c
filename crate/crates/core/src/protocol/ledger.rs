//! Per-party accounting of frames, bytes and busy time.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use super::frame::{FrameType, Phase};
use crate::util::fnv1a64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub direction: Direction,
    pub phase: Phase,
    pub frame_type: FrameType,
    pub round: u32,
    pub bytes: usize,
    pub digest: u64,
    /// Full frame bytes, kept only when transcripts are enabled.
    pub raw: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseStats {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Ledger {
    keep_raw: bool,
    records: Vec<FrameRecord>,
    phases: BTreeMap<Phase, PhaseStats>,
    pub rotations: u64,
    pub he_mults: u64,
}

pub type SharedLedger = Arc<Mutex<Ledger>>;

pub fn shared_ledger(keep_raw: bool) -> SharedLedger {
    Arc::new(Mutex::new(Ledger {
        keep_raw,
        ..Ledger::default()
    }))
}

/// Locks a ledger, recovering from a poisoned mutex.
pub fn lock(ledger: &SharedLedger) -> MutexGuard<'_, Ledger> {
    ledger.lock().unwrap_or_else(|p| p.into_inner())
}

impl Ledger {
    pub fn record(&mut self, direction: Direction, phase: Phase, frame_type: FrameType, round: u32, raw: &[u8]) {
        let stats = self.phases.entry(phase).or_default();
        match direction {
            Direction::Sent => stats.bytes_sent += raw.len() as u64,
            Direction::Received => stats.bytes_received += raw.len() as u64,
        }
        self.records.push(FrameRecord {
            direction,
            phase,
            frame_type,
            round,
            bytes: raw.len(),
            digest: fnv1a64(raw),
            raw: self.keep_raw.then(|| raw.to_vec()),
        });
    }

    pub fn add_time(&mut self, phase: Phase, elapsed: Duration) {
        self.phases.entry(phase).or_default().seconds += elapsed.as_secs_f64();
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn phases(&self) -> &BTreeMap<Phase, PhaseStats> {
        &self.phases
    }

    pub fn bytes_sent(&self) -> u64 {
        self.phases.values().map(|s| s.bytes_sent).sum()
    }

    pub fn bytes_received(&self) -> u64 {
        self.phases.values().map(|s| s.bytes_received).sum()
    }

    pub fn busy_seconds(&self) -> f64 {
        self.phases.values().map(|s| s.seconds).sum()
    }

    /// Digest sequence identifying the transcript.
    pub fn transcript_digest(&self) -> Vec<(Direction, u64)> {
        self.records.iter().map(|r| (r.direction, r.digest)).collect()
    }
}

/// Plain-text table of both parties' per-phase counters.
pub fn ledger_report(party1: &Ledger, party2: &Ledger) -> String {
    let mut out = String::from("party phase        sent_bytes  recv_bytes  seconds\n");
    for (name, l) in [("1", party1), ("2", party2)] {
        for (phase, s) in l.phases() {
            out.push_str(&format!(
                "{name:<5} {:<12} {:>10}  {:>10}  {:.4}\n",
                phase.name(),
                s.bytes_sent,
                s.bytes_received,
                s.seconds
            ));
        }
        out.push_str(&format!(
            "{name:<5} {:<12} {:>10}  {:>10}  {:.4}\n",
            "total",
            l.bytes_sent(),
            l.bytes_received(),
            l.busy_seconds()
        ));
    }
    out
}
