//! Rotation-free backend over two key pairs.
//!
//! The shared dimension is split in halves. Party 1 encrypts its second
//! half of the operand under its own key; party 2 encrypts its first half
//! of the column under its key. Each side multiplies the peer's ciphertext
//! by its own plaintext, adds a random mask and hands the result back for
//! decryption. Block sums of the decrypted products, minus the mask sums,
//! give the two partial results.

use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::endpoint::Endpoint;
use super::fhe::{block_sums, recv_cts, send_ct, sync_counters, uniform_mask};
use super::frame::{decode_f64s, encode_f64s, FrameType, Phase};
use crate::error::Result;
use crate::he::{gen_keyset, Ciphertext, Evaluator, HeContext, PublicKeySet, SecretKey};
use crate::linalg::Matrix;

/// Sizes of the two halves of a shared dimension `n`.
pub fn halves(n: usize) -> (usize, usize) {
    let h1 = n.div_ceil(2);
    (h1, n - h1)
}

pub(crate) struct V2Party {
    ctx: Arc<HeContext>,
    ev: Evaluator,
    sk: SecretKey,
    own: PublicKeySet,
    rng: ChaCha20Rng,
}

/// Row-major flattening of `rows` restricted to columns `c0..c1`.
fn flatten_rows(m: &Matrix, c0: usize, c1: usize) -> Vec<f64> {
    (0..m.rows()).flat_map(|r| m.row(r)[c0..c1].to_vec()).collect()
}

fn tile(v: &[f64], times: usize) -> Vec<f64> {
    (0..times).flat_map(|_| v.iter().copied()).collect()
}

impl V2Party {
    /// Each party only ever encrypts under its own key, so no key
    /// material crosses the wire.
    pub fn new(ctx: Arc<HeContext>, mut rng: ChaCha20Rng) -> Self {
        let (sk, own) = gen_keyset(&ctx, &mut rng, false);
        Self {
            ev: Evaluator::new(ctx.clone()),
            ctx,
            sk,
            own,
            rng,
        }
    }

    fn encrypt_chunks(&mut self, ep: &mut Endpoint, flat: &[f64]) -> Result<()> {
        let pk = self.own.public()?.clone();
        for chunk in flat.chunks(self.ctx.slots()) {
            let ct = self.ev.encrypt_values(chunk, &pk, &mut self.rng)?;
            send_ct(ep, &self.ctx, &ct)?;
        }
        Ok(())
    }

    /// Masked products of the peer's ciphertexts with `plain`; returns the mask.
    fn masked_products(&mut self, cts: &[Ciphertext], plain: &[f64]) -> Result<(Vec<Ciphertext>, Vec<f64>)> {
        let mask = uniform_mask(&mut self.rng, plain.len());
        let slots = self.ctx.slots();
        let products = cts
            .iter()
            .zip(plain.chunks(slots).zip(mask.chunks(slots)))
            .map(|(ct, (p, m))| {
                let prod = self.ev.mul_values_rescale(ct, p)?;
                let pt = self.ev.encode(m, prod.scale, prod.level)?;
                self.ev.add_plain(&prod, &pt)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((products, mask))
    }

    fn decrypt_flat(&self, cts: &[Ciphertext], len: usize) -> Vec<f64> {
        let mut flat: Vec<f64> = cts.iter().flat_map(|c| self.ev.decrypt_values(c, &self.sk)).collect();
        flat.truncate(len);
        flat
    }

    /// Party 1: `x · y` for one right-hand column of party 2.
    pub fn party1_column(&mut self, ep: &mut Endpoint, x: &Matrix) -> Result<Vec<f64>> {
        let (k, n) = (x.rows(), x.cols());
        let (h1, h2) = halves(n);
        let slots = self.ctx.slots();
        ep.set_phase(Phase::Input);
        self.encrypt_chunks(ep, &flatten_rows(x, h1, n))?;
        let j1 = recv_cts(ep, &self.ctx, (k * h1).div_ceil(slots))?;
        let p2 = recv_cts(ep, &self.ctx, (k * h2).div_ceil(slots))?;

        ep.set_phase(Phase::Compute);
        let b2 = block_sums(&self.decrypt_flat(&p2, k * h2), k, h2);
        let (p1, mask) = self.masked_products(&j1, &flatten_rows(x, 0, h1))?;
        let mask_sums = block_sums(&mask, k, h1);

        ep.set_phase(Phase::Result);
        for ct in &p1 {
            send_ct(ep, &self.ctx, ct)?;
        }
        let reply = decode_f64s(&ep.recv(FrameType::Cleartext)?.payload)?;
        if reply.len() != 2 * k {
            return Err(ep.protocol_error(format!("{} partial sums for {k} rows", reply.len())));
        }
        let out = (0..k)
            .map(|p| (reply[p] - mask_sums[p]) + (b2[p] - reply[k + p]))
            .collect();
        sync_counters(ep, &self.ev);
        ep.flush();
        Ok(out)
    }

    /// Party 2: its column `y` against a `k`-row operand.
    pub fn party2_column(&mut self, ep: &mut Endpoint, y: &[f64], k: usize) -> Result<()> {
        let n = y.len();
        let (h1, h2) = halves(n);
        let slots = self.ctx.slots();
        ep.set_phase(Phase::Input);
        let s2 = recv_cts(ep, &self.ctx, (k * h2).div_ceil(slots))?;
        self.encrypt_chunks(ep, &tile(&y[..h1], k))?;

        ep.set_phase(Phase::Compute);
        let (p2, mask) = self.masked_products(&s2, &tile(&y[h1..], k))?;
        let mask_sums = block_sums(&mask, k, h2);
        for ct in &p2 {
            send_ct(ep, &self.ctx, ct)?;
        }

        ep.set_phase(Phase::Result);
        let p1 = recv_cts(ep, &self.ctx, (k * h1).div_ceil(slots))?;
        let mut reply = block_sums(&self.decrypt_flat(&p1, k * h1), k, h1);
        reply.extend(mask_sums);
        ep.send(FrameType::Cleartext, encode_f64s(&reply))?;
        sync_counters(ep, &self.ev);
        ep.flush();
        Ok(())
    }
}
