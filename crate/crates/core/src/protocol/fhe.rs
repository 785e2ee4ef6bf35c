//! Frame helpers shared by the two encrypted backends.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::endpoint::Endpoint;
use super::frame::FrameType;
use super::ledger::lock;
use crate::error::Result;
use crate::he::serial::{read_ciphertext, read_key_set, write_ciphertext, write_key_set};
use crate::he::{Ciphertext, Evaluator, HeContext, PublicKeySet};
use crate::mpc::PartyId;

/// Bound of the uniform additive masks on decrypted slots.
pub const MASK_BOUND: f64 = 1024.0;

pub(crate) fn party_rng(seed: u64, party: PartyId) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(0x100 + party.index() as u64);
    rng
}

pub(crate) fn send_ct(ep: &mut Endpoint, ctx: &HeContext, ct: &Ciphertext) -> Result<()> {
    ep.send(FrameType::Ciphertext, write_ciphertext(ctx, ct))
}

pub(crate) fn recv_cts(ep: &mut Endpoint, ctx: &HeContext, count: usize) -> Result<Vec<Ciphertext>> {
    (0..count)
        .map(|_| {
            let f = ep.recv(FrameType::Ciphertext)?;
            read_ciphertext(ctx, &f.payload)
        })
        .collect()
}

pub(crate) fn send_keys(ep: &mut Endpoint, ctx: &HeContext, keys: &PublicKeySet) -> Result<()> {
    ep.send(FrameType::Keys, write_key_set(ctx, keys)?)
}

pub(crate) fn recv_keys(ep: &mut Endpoint, ctx: &HeContext) -> Result<PublicKeySet> {
    let f = ep.recv(FrameType::Keys)?;
    let keys = read_key_set(ctx, &f.payload)?;
    keys.public()?;
    Ok(keys)
}

pub(crate) fn uniform_mask<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-MASK_BOUND..MASK_BOUND)).collect()
}

/// Publishes the evaluator's operation counters to the party's ledger.
pub(crate) fn sync_counters(ep: &Endpoint, ev: &Evaluator) {
    let mut l = lock(ep.ledger());
    l.rotations = ev.rotation_count();
    l.he_mults = ev.mult_count();
}

pub(crate) fn context(params: &crate::he::HeParams) -> Result<Arc<HeContext>> {
    HeContext::new(params.clone())
}

/// Sums of consecutive blocks of length `block` in `flat`.
pub(crate) fn block_sums(flat: &[f64], blocks: usize, block: usize) -> Vec<f64> {
    (0..blocks)
        .map(|p| flat[p * block..(p + 1) * block].iter().sum())
        .collect()
}
