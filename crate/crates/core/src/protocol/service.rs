//! Party 2's request loop.

use super::endpoint::Endpoint;
use super::fhe::{context, party_rng};
use super::fhe_v1::V1Party2;
use super::fhe_v2::V2Party;
use super::frame::{decode_u32s, FrameType, Phase};
use super::ledger::SharedLedger;
use super::mpc::{party2_product, MpcParty};
use super::request::{Operation, Request};
use super::session::{handshake_responder, SessionConfig};
use super::transport::Transport;
use crate::error::{Error, Result};
use crate::joint::{Backend, TargetSide};
use crate::linalg::Matrix;
use crate::mpc::PartyId;

enum Engine {
    Mpc(MpcParty),
    V1(V1Party2),
    V2(V2Party),
}

pub struct Party2Service {
    ep: Endpoint,
    cfg: SessionConfig,
    target: TargetSide,
    engine: Option<Engine>,
    requests: u64,
}

impl Party2Service {
    pub fn new(transport: Box<dyn Transport>, cfg: SessionConfig, target: TargetSide, ledger: SharedLedger) -> Self {
        let ep = Endpoint::new(PartyId::Two, cfg.session_id, transport, ledger);
        Self {
            ep,
            cfg,
            target,
            engine: None,
            requests: 0,
        }
    }

    /// Number of products served so far.
    pub fn requests(&self) -> u64 {
        self.requests
    }

    /// Serves requests until party 1 closes the session.
    pub fn run(&mut self, crypto_seed: u64) -> Result<()> {
        let res = self.run_inner(crypto_seed);
        if let Err(e) = &res {
            if !matches!(e, Error::Protocol { .. } | Error::Transport(_)) {
                self.ep.abort(e);
            }
        }
        res
    }

    fn run_inner(&mut self, crypto_seed: u64) -> Result<()> {
        self.cfg.validate()?;
        if self.target.n_levels() != self.cfg.level_dims.len() {
            return Err(Error::Config(format!(
                "target pyramid has {} levels, session declares {}",
                self.target.n_levels(),
                self.cfg.level_dims.len()
            )));
        }
        handshake_responder(&mut self.ep, &self.cfg)?;
        let rng = party_rng(crypto_seed, PartyId::Two);
        let engine = match self.cfg.backend {
            Backend::Mpc => Engine::Mpc(MpcParty::new(PartyId::Two, self.cfg.seed, self.cfg.frac_bits, rng)),
            Backend::FheV1 => Engine::V1(V1Party2::key_exchange(
                &mut self.ep,
                context(&self.cfg.he)?,
                self.cfg.block,
                rng,
            )?),
            Backend::FheV2 => Engine::V2(V2Party::new(context(&self.cfg.he)?, rng)),
            Backend::Clear => return Err(Error::Config("the clear backend runs without a peer".into())),
        };
        self.engine = Some(engine);
        self.ep.flush();
        loop {
            self.ep.set_phase(Phase::Request);
            let frame = self.ep.recv_any(&[FrameType::Request, FrameType::Close])?;
            if frame.frame_type == FrameType::Close {
                self.ep.set_phase(Phase::Close);
                self.ep.flush();
                return Ok(());
            }
            let req = Request::decode(&frame.payload)?;
            self.serve(req)?;
            self.requests += 1;
        }
    }

    fn recv_samples(&mut self, n: usize, level_len: usize) -> Result<Vec<usize>> {
        let idx = decode_u32s(&self.ep.recv(FrameType::SampleIndex)?.payload)?;
        if idx.len() != n {
            return Err(self
                .ep
                .protocol_error(format!("{} sample indices for n = {n}", idx.len())));
        }
        idx.into_iter()
            .map(|i| {
                let i = i as usize;
                if i < level_len {
                    Ok(i)
                } else {
                    Err(self
                        .ep
                        .protocol_error(format!("sample {i} outside level of {level_len} voxels")))
                }
            })
            .collect()
    }

    fn rhs(&self, op: Operation, level: usize, samples: &[usize]) -> Result<Matrix> {
        match op {
            Operation::MatVec => {
                let v = self.target.values(level, samples)?;
                Matrix::from_vec(v.len(), 1, v)
            }
            Operation::MatMulHist => self.target.histogram(level, samples),
        }
    }

    fn serve(&mut self, req: Request) -> Result<()> {
        let level = req.level as usize;
        let level_len = self.cfg.level_len(level)?;
        let (k, n, m) = (req.k as usize, req.n as usize, req.m as usize);
        let expected_m = match req.op {
            Operation::MatVec => 1,
            Operation::MatMulHist => self.cfg.bins_t,
        };
        if m != expected_m || k == 0 || n == 0 {
            return Err(self.ep.protocol_error(format!("malformed request {req:?}")));
        }
        let mut engine = self.engine.take().expect("engine set after handshake");
        let res = (|| match &mut engine {
            Engine::Mpc(st) => {
                let samples = self.recv_samples(n, level_len)?;
                let y = self.rhs(req.op, level, &samples)?;
                party2_product(&mut self.ep, st, &y, k)
            }
            Engine::V1(v1) if req.op == Operation::MatVec => {
                if n != level_len {
                    return Err(self
                        .ep
                        .protocol_error(format!("level {level} has {level_len} voxels, request says {n}")));
                }
                if req.need_upload {
                    let all: Vec<usize> = (0..level_len).collect();
                    let col = self.target.values(level, &all)?;
                    v1.upload(&mut self.ep, &[col])?;
                }
                self.ep.set_phase(Phase::Compute);
                v1.answer(&mut self.ep, k)
            }
            Engine::V1(v1) => {
                let samples = self.recv_samples(n, level_len)?;
                let b = self.rhs(req.op, level, &samples)?;
                let cols: Vec<Vec<f64>> = (0..m).map(|t| (0..n).map(|i| b.get(i, t)).collect()).collect();
                v1.upload(&mut self.ep, &cols)?;
                v1.answer(&mut self.ep, k)
            }
            Engine::V2(v2) => {
                let samples = self.recv_samples(n, level_len)?;
                let y = self.rhs(req.op, level, &samples)?;
                for t in 0..m {
                    let col: Vec<f64> = (0..n).map(|i| y.get(i, t)).collect();
                    v2.party2_column(&mut self.ep, &col, k)?;
                }
                Ok(())
            }
        })();
        self.engine = Some(engine);
        res
    }
}
