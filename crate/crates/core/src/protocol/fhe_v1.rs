//! Rotate-and-sum backend.
//!
//! Party 2 encrypts its image under its own key in partitions of `D`
//! voxels, each replicated across the slots. Party 1 multiplies by its
//! plaintext rows, folds each block with rotations, masks every slot
//! except the block heads and returns the ciphertexts for decryption.
//! For `lhs · J` the sample set never leaves party 1: its rows are
//! scattered over the whole level with zeros at unsampled voxels.

use std::collections::HashMap;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::endpoint::Endpoint;
use super::fhe::{recv_cts, recv_keys, send_ct, send_keys, sync_counters, uniform_mask};
use super::frame::{decode_f64s, decode_u32s, encode_f64s, encode_u32s, FrameType, Phase};
use crate::error::Result;
use crate::he::{gen_keyset, replicate, Ciphertext, Evaluator, HeContext, PublicKeySet, SecretKey};
use crate::linalg::Matrix;

fn partitions(len: usize, block: usize) -> usize {
    len.div_ceil(block)
}

pub(crate) struct V1Party1 {
    ctx: Arc<HeContext>,
    ev: Evaluator,
    keys: PublicKeySet,
    rng: ChaCha20Rng,
    block: usize,
    cache: HashMap<usize, Vec<Ciphertext>>,
}

pub(crate) struct V1Party2 {
    ctx: Arc<HeContext>,
    ev: Evaluator,
    sk: SecretKey,
    rng: ChaCha20Rng,
    keys: PublicKeySet,
    block: usize,
}

impl V1Party1 {
    pub fn key_exchange(ep: &mut Endpoint, ctx: Arc<HeContext>, block: usize, rng: ChaCha20Rng) -> Result<Self> {
        ep.set_phase(Phase::KeyExchange);
        let keys = recv_keys(ep, &ctx)?;
        Ok(Self {
            ev: Evaluator::new(ctx.clone()),
            ctx,
            keys,
            rng,
            block,
            cache: HashMap::new(),
        })
    }

    pub fn has_level(&self, level: usize) -> bool {
        self.cache.contains_key(&level)
    }

    /// Folds `rows` (`k × len`) against column ciphertexts covering `len`
    /// entries; one masked ciphertext per row group.
    fn fold(&mut self, cts: &[Ciphertext], rows: &Matrix) -> Result<Vec<Option<Ciphertext>>> {
        let d = self.block;
        let slots = self.ctx.slots();
        let per_group = slots / d;
        let (k, len) = (rows.rows(), rows.cols());
        let mut out = Vec::new();
        for g0 in (0..k).step_by(per_group) {
            let g1 = (g0 + per_group).min(k);
            let mut acc: Option<Ciphertext> = None;
            for (i, ct) in cts.iter().enumerate() {
                let (c0, c1) = (i * d, ((i + 1) * d).min(len));
                let block_rows: Vec<Vec<f64>> = (g0..g1)
                    .map(|r| {
                        let mut row = rows.row(r)[c0..c1].to_vec();
                        row.resize(d, 0.0);
                        row
                    })
                    .collect();
                let (dot, _) = self.ev.dot_plain(ct, &block_rows, &self.keys)?;
                acc = Some(match acc {
                    Some(a) => self.ev.add(&a, &dot)?,
                    None => dot,
                });
            }
            out.push(match acc {
                Some(a) => {
                    let mask: Vec<f64> = uniform_mask(&mut self.rng, slots)
                        .into_iter()
                        .enumerate()
                        .map(|(s, v)| if s % d == 0 && s / d < g1 - g0 { 0.0 } else { v })
                        .collect();
                    let pt = self.ev.encode(&mask, a.scale, a.level)?;
                    Some(self.ev.add_plain(&a, &pt)?)
                }
                None => None,
            });
        }
        Ok(out)
    }

    /// Sends the folded ciphertexts and collects the decrypted block heads
    /// into a `k × cols` matrix.
    fn finish(&mut self, ep: &mut Endpoint, folded: Vec<Vec<Option<Ciphertext>>>, k: usize) -> Result<Matrix> {
        let per_group = self.ctx.slots() / self.block;
        let groups = k.div_ceil(per_group);
        let cols = folded.len();
        ep.set_phase(Phase::Result);
        let mut ids = Vec::new();
        for (c, col) in folded.iter().enumerate() {
            for (g, ct) in col.iter().enumerate() {
                if ct.is_some() {
                    ids.push((c * groups + g) as u32);
                }
            }
        }
        ep.send(FrameType::ResultHeader, encode_u32s(&ids))?;
        for ct in folded.iter().flatten().flatten() {
            send_ct(ep, &self.ctx, ct)?;
        }
        let values = decode_f64s(&ep.recv(FrameType::Cleartext)?.payload)?;
        let mut out = Matrix::zeros(k, cols);
        let mut it = values.into_iter();
        for &id in &ids {
            let (c, g) = (id as usize / groups, id as usize % groups);
            for r in g * per_group..((g + 1) * per_group).min(k) {
                let v = it.next().ok_or_else(|| ep.protocol_error("too few decrypted values"))?;
                out.set(r, c, v);
            }
        }
        if it.next().is_some() {
            return Err(ep.protocol_error("too many decrypted values"));
        }
        sync_counters(ep, &self.ev);
        ep.flush();
        Ok(out)
    }

    /// `lhs · J` with `lhs` scattered over all `level_len` voxels.
    pub fn matvec(&mut self, ep: &mut Endpoint, level: usize, level_len: usize, full: &Matrix) -> Result<Vec<f64>> {
        if !self.has_level(level) {
            ep.set_phase(Phase::ImageUpload);
            let cts = recv_cts(ep, &self.ctx, partitions(level_len, self.block))?;
            self.cache.insert(level, cts);
        }
        ep.set_phase(Phase::Compute);
        let cts = self.cache.remove(&level).expect("cached level");
        let folded = self.fold(&cts, full);
        self.cache.insert(level, cts);
        let out = self.finish(ep, vec![folded?], full.rows())?;
        Ok(out.into_data())
    }

    /// `lhs · B[samples]`; the histogram columns are uploaded per request.
    pub fn matmul(&mut self, ep: &mut Endpoint, lhs: &Matrix, bins: usize) -> Result<Matrix> {
        ep.set_phase(Phase::ImageUpload);
        let parts = partitions(lhs.cols(), self.block);
        let uploads = recv_cts(ep, &self.ctx, bins * parts)?;
        ep.set_phase(Phase::Compute);
        let folded = uploads
            .chunks(parts)
            .map(|col| self.fold(col, lhs))
            .collect::<Result<Vec<_>>>()?;
        self.finish(ep, folded, lhs.rows())
    }
}

impl V1Party2 {
    pub fn key_exchange(ep: &mut Endpoint, ctx: Arc<HeContext>, block: usize, mut rng: ChaCha20Rng) -> Result<Self> {
        ep.set_phase(Phase::KeyExchange);
        let (sk, keys) = gen_keyset(&ctx, &mut rng, true);
        send_keys(ep, &ctx, &keys)?;
        Ok(Self {
            ev: Evaluator::new(ctx.clone()),
            ctx,
            sk,
            rng,
            keys,
            block,
        })
    }

    /// Encrypts `columns` (each over the same `len` entries) partition by partition.
    pub fn upload(&mut self, ep: &mut Endpoint, columns: &[Vec<f64>]) -> Result<()> {
        ep.set_phase(Phase::ImageUpload);
        let pk = self.keys.public()?.clone();
        let slots = self.ctx.slots();
        for col in columns {
            for part in col.chunks(self.block) {
                let ct = self
                    .ev
                    .encrypt_values(&replicate(part, self.block, slots), &pk, &mut self.rng)?;
                send_ct(ep, &self.ctx, &ct)?;
            }
        }
        Ok(())
    }

    /// Decrypts the folded ciphertexts and returns the block heads.
    pub fn answer(&mut self, ep: &mut Endpoint, k: usize) -> Result<()> {
        ep.set_phase(Phase::Result);
        let per_group = self.ctx.slots() / self.block;
        let groups = k.div_ceil(per_group);
        let ids = decode_u32s(&ep.recv(FrameType::ResultHeader)?.payload)?;
        let mut values = Vec::new();
        for id in ids {
            let g = id as usize % groups;
            let ct = recv_cts(ep, &self.ctx, 1)?.pop().expect("one ciphertext");
            let slots = self.ev.decrypt_values(&ct, &self.sk);
            let rows = ((g + 1) * per_group).min(k) - g * per_group;
            values.extend((0..rows).map(|r| slots[r * self.block]));
        }
        ep.send(FrameType::Cleartext, encode_f64s(&values))?;
        sync_counters(ep, &self.ev);
        ep.flush();
        Ok(())
    }
}
