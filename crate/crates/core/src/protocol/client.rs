//! Party 1's secure implementation of [`JointProducts`].

use super::endpoint::Endpoint;
use super::fhe::{context, party_rng};
use super::fhe_v1::V1Party1;
use super::fhe_v2::V2Party;
use super::frame::{encode_u32s, FrameType, Phase};
use super::ledger::{lock, SharedLedger};
use super::mpc::{party1_product, MpcParty};
use super::request::{Operation, Request};
use super::session::{handshake_initiator, SessionConfig};
use super::transport::Transport;
use crate::error::{Error, Result};
use crate::joint::{check_lhs, Backend, JointProducts, Usage};
use crate::linalg::Matrix;
use crate::mpc::PartyId;

/// Upper bound on a normalized row's L1 norm under fixed-point sharing;
/// keeps `|lhs · y|` under the codec limit for `|y| <= 2`.
pub const MPC_ROW_L1_CAP: f64 = 16384.0;
const FHE_ROW_L1_CAP: f64 = 131072.0;

/// Per-row factors bringing every entry into `[-1, 1]` and the L1 norm
/// under `l1_cap`. Zero rows keep factor 1.
pub fn row_scales(lhs: &Matrix, l1_cap: f64) -> Vec<f64> {
    (0..lhs.rows())
        .map(|r| {
            let row = lhs.row(r);
            let max = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if max == 0.0 {
                return 1.0;
            }
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            (1.0 / max).min(l1_cap / l1)
        })
        .collect()
}

/// Worst-case error of one MPC product entry `Σ_j x_j y_j` for a row `x`
/// and a column `y` with `|y_j| <= 1`.
///
/// With `ε = 2^-(f+1)` the rounding error of each encoded operand, `s`
/// the row's factor from [`row_scales`] and `n` the number of nonzero
/// `x_j`, the bound is `(ε(s‖x‖₁ + ‖y‖₁) + nε² + 2^(1-f)) / s`; the last
/// term covers the dealer-assisted truncation. Zero entries of `x` encode
/// exactly, so `‖y‖₁` may be taken over the support of `x` alone.
pub fn mpc_error_bound(row: &[f64], column_l1: f64, frac_bits: u32) -> f64 {
    let max = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let l1: f64 = row.iter().map(|v| v.abs()).sum();
    let s = (1.0 / max).min(MPC_ROW_L1_CAP / l1);
    let eps = 0.5f64.powi(frac_bits as i32 + 1);
    let n = row.iter().filter(|v| **v != 0.0).count() as f64;
    (eps * (s * l1 + column_l1) + n * eps * eps + 2.0 * 0.5f64.powi(frac_bits as i32)) / s
}

fn scale_rows(lhs: &Matrix, scales: &[f64]) -> Matrix {
    let mut out = lhs.clone();
    for (r, &s) in scales.iter().enumerate() {
        out.row_mut(r).iter_mut().for_each(|v| *v *= s);
    }
    out
}

enum Engine {
    Mpc(MpcParty),
    V1(V1Party1),
    V2(V2Party),
}

pub struct SecureJoint {
    ep: Endpoint,
    cfg: SessionConfig,
    engine: Engine,
    peer_ledger: Option<SharedLedger>,
    closed: bool,
}

impl SecureJoint {
    /// Runs the handshake and key exchange as party 1.
    ///
    /// `peer_ledger` lets in-process runs report the peer's counters.
    pub fn connect(
        transport: Box<dyn Transport>,
        cfg: SessionConfig,
        ledger: SharedLedger,
        peer_ledger: Option<SharedLedger>,
        crypto_seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut ep = Endpoint::new(PartyId::One, cfg.session_id, transport, ledger);
        let engine = (|| {
            handshake_initiator(&mut ep, &cfg)?;
            let rng = party_rng(crypto_seed, PartyId::One);
            Ok(match cfg.backend {
                Backend::Mpc => Engine::Mpc(MpcParty::new(PartyId::One, cfg.seed, cfg.frac_bits, rng)),
                Backend::FheV1 => Engine::V1(V1Party1::key_exchange(&mut ep, context(&cfg.he)?, cfg.block, rng)?),
                Backend::FheV2 => Engine::V2(V2Party::new(context(&cfg.he)?, rng)),
                Backend::Clear => return Err(Error::Config("the clear backend runs without a peer".into())),
            })
        })();
        let engine = match engine {
            Ok(e) => e,
            Err(e) => {
                if !matches!(e, Error::Protocol { .. } | Error::Transport(_)) {
                    ep.abort(&e);
                }
                return Err(e);
            }
        };
        ep.flush();
        Ok(Self {
            ep,
            cfg,
            engine,
            peer_ledger,
            closed: false,
        })
    }

    pub fn ledger(&self) -> &SharedLedger {
        self.ep.ledger()
    }

    pub fn peer_ledger(&self) -> Option<&SharedLedger> {
        self.peer_ledger.as_ref()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    /// Ends the session; party 2's service loop returns.
    pub fn close(&mut self) -> Result<()> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        self.ep.set_phase(Phase::Close);
        self.ep.send(FrameType::Close, Vec::new())?;
        self.ep.flush();
        Ok(())
    }

    fn send_request(&mut self, req: Request, samples: Option<&[usize]>) -> Result<()> {
        self.ep.set_phase(Phase::Request);
        self.ep.send(FrameType::Request, req.encode())?;
        if let Some(s) = samples {
            let idx: Vec<u32> = s.iter().map(|&v| v as u32).collect();
            self.ep.send(FrameType::SampleIndex, encode_u32s(&idx))?;
        }
        Ok(())
    }

    fn product(&mut self, op: Operation, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Matrix> {
        check_lhs(lhs, samples)?;
        let level_len = self.cfg.level_len(level)?;
        if let Some(&bad) = samples.iter().find(|&&s| s >= level_len) {
            return Err(Error::arg(format!(
                "sample {bad} outside level {level} of {level_len} voxels"
            )));
        }
        let m = match op {
            Operation::MatVec => 1,
            Operation::MatMulHist => self.cfg.bins_t,
        };
        let cap = match self.engine {
            Engine::Mpc(_) => MPC_ROW_L1_CAP,
            _ => FHE_ROW_L1_CAP,
        };
        let scales = row_scales(lhs, cap);
        let x = scale_rows(lhs, &scales);
        let k = lhs.rows();
        let mut req = Request {
            op,
            need_upload: false,
            level: level as u32,
            k: k as u32,
            n: samples.len() as u32,
            m: m as u32,
        };
        let mut out = match &mut self.engine {
            Engine::Mpc(_) => {
                self.send_request(req, Some(samples))?;
                let Engine::Mpc(st) = &mut self.engine else {
                    unreachable!()
                };
                party1_product(&mut self.ep, st, &x, m)?
            }
            Engine::V1(v1) if op == Operation::MatVec => {
                req.need_upload = !v1.has_level(level);
                req.n = level_len as u32;
                let mut full = Matrix::zeros(k, level_len);
                for r in 0..k {
                    for (c, &s) in samples.iter().enumerate() {
                        full.set(r, s, x.get(r, c));
                    }
                }
                self.send_request(req, None)?;
                let Engine::V1(v1) = &mut self.engine else {
                    unreachable!()
                };
                Matrix::from_vec(k, 1, v1.matvec(&mut self.ep, level, level_len, &full)?)?
            }
            Engine::V1(_) => {
                req.need_upload = true;
                self.send_request(req, Some(samples))?;
                let Engine::V1(v1) = &mut self.engine else {
                    unreachable!()
                };
                v1.matmul(&mut self.ep, &x, m)?
            }
            Engine::V2(_) => {
                self.send_request(req, Some(samples))?;
                let Engine::V2(v2) = &mut self.engine else {
                    unreachable!()
                };
                let mut out = Matrix::zeros(k, m);
                for t in 0..m {
                    let col = v2.party1_column(&mut self.ep, &x)?;
                    for (r, v) in col.into_iter().enumerate() {
                        out.set(r, t, v);
                    }
                }
                out
            }
        };
        for (r, &s) in scales.iter().enumerate() {
            // a zero row's product is known to be zero; drop its noise
            let zero = lhs.row(r).iter().all(|&v| v == 0.0);
            out.row_mut(r)
                .iter_mut()
                .for_each(|v| *v = if zero { 0.0 } else { *v / s });
        }
        Ok(out)
    }
}

impl JointProducts for SecureJoint {
    fn backend(&self) -> Backend {
        self.cfg.backend
    }

    fn matvec(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Vec<f64>> {
        Ok(self.product(Operation::MatVec, level, samples, lhs)?.into_data())
    }

    fn matmul_hist(&mut self, level: usize, samples: &[usize], lhs: &Matrix) -> Result<Matrix> {
        self.product(Operation::MatMulHist, level, samples, lhs)
    }

    fn error_bounds(&self, lhs: &Matrix) -> Vec<f64> {
        match self.engine {
            Engine::Mpc(_) => (0..lhs.rows())
                .map(|r| {
                    let row = lhs.row(r);
                    let support = row.iter().filter(|v| **v != 0.0).count();
                    mpc_error_bound(row, support as f64, self.cfg.frac_bits)
                })
                .collect(),
            _ => vec![0.0; lhs.rows()],
        }
    }

    fn usage(&self) -> Usage {
        let own = lock(self.ep.ledger()).clone();
        let peer = self.peer_ledger.as_ref().map(|l| lock(l).clone()).unwrap_or_default();
        Usage {
            party1_seconds: own.busy_seconds(),
            party2_seconds: peer.busy_seconds(),
            party1_bytes: own.bytes_sent(),
            party2_bytes: own.bytes_received(),
            rotations: own.rotations + peer.rotations,
            he_mults: own.he_mults + peer.he_mults,
        }
    }
}

impl Drop for SecureJoint {
    fn drop(&mut self) {
        let _ = self.close();
    }
}
