//! Party-local steps of a Beaver product `X · Y`, where party 1 owns `X`
//! and party 2 owns `Y`.
//!
//! 1. input sharing: each owner keeps `secret - mask` and sends `mask`;
//! 2. masked open: both publish `E_i = X_i - U_i`, `F_i = Y_i - V_i`;
//! 3. party 2 sends `Z_2 + r_2` and `-⌊r/2^f⌋_2`; party 1 finishes the
//!    truncation and holds the result.

use rand::Rng;

use super::codec::{FixedPointCodec, TRUNCATION_BITS};
use super::dealer::{Dealer, ProductShape, TripleShare, TruncationShare};
use super::ring::{add_assign, ring_add, ring_matmul, ring_sub};
use super::share::PartyId;
use crate::error::{Error, Result};

/// Splits an owned secret into (kept share, share sent to the peer).
pub fn split_input<R: Rng + ?Sized>(secret: &[u64], rng: &mut R) -> (Vec<u64>, Vec<u64>) {
    let sent: Vec<u64> = (0..secret.len()).map(|_| rng.random()).collect();
    (ring_sub(secret, &sent), sent)
}

#[derive(Debug, Clone)]
pub struct BeaverState {
    pub party: PartyId,
    pub shape: ProductShape,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub triple: TripleShare,
    pub trunc: TruncationShare,
}

impl BeaverState {
    pub fn new(party: PartyId, x: Vec<u64>, y: Vec<u64>, triple: TripleShare, trunc: TruncationShare) -> Result<Self> {
        let shape = triple.shape;
        if x.len() != shape.lhs_len() || y.len() != shape.rhs_len() {
            return Err(Error::arg(format!(
                "operand shares ({}, {}) do not fit triple shape {shape:?}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self {
            party,
            shape,
            x,
            y,
            triple,
            trunc,
        })
    }
}

/// One party's contribution to the opened masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedOpen {
    pub e: Vec<u64>,
    pub f: Vec<u64>,
}

pub fn masked_open(state: &BeaverState) -> MaskedOpen {
    MaskedOpen {
        e: ring_sub(&state.x, &state.triple.u),
        f: ring_sub(&state.y, &state.triple.v),
    }
}

/// Share of the untruncated product `Z = X·Y` with `2f` fractional bits.
pub fn local_product(state: &BeaverState, own: &MaskedOpen, peer: &MaskedOpen) -> Result<Vec<u64>> {
    if own.e.len() != peer.e.len() || own.f.len() != peer.f.len() {
        return Err(Error::protocol(0, "peer opened masks of the wrong size"));
    }
    let ProductShape { k, n, m } = state.shape;
    let e = ring_add(&own.e, &peer.e);
    let f = ring_add(&own.f, &peer.f);
    let mut z = state.triple.w.clone();
    let v_term = match state.party {
        PartyId::One => ring_add(&state.triple.v, &f),
        PartyId::Two => state.triple.v.clone(),
    };
    add_assign(&mut z, &ring_matmul(&e, &v_term, k, n, m));
    add_assign(&mut z, &ring_matmul(&state.triple.u, &f, k, n, m));
    Ok(z)
}

/// Party 2's final message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationMsg {
    pub masked: Vec<u64>,
    pub result_share: Vec<u64>,
}

pub fn truncation_msg(state: &BeaverState, z2: &[u64]) -> TruncationMsg {
    TruncationMsg {
        masked: ring_add(z2, &state.trunc.r),
        result_share: state.trunc.r_shifted.iter().map(|v| v.wrapping_neg()).collect(),
    }
}

/// Party 1 opens `c = Z + 2^(ℓ-1) + r` and removes the mask, leaving
/// `X·Y` with `f` fractional bits.
pub fn finish_party1(
    state: &BeaverState,
    z1: &[u64],
    msg: &TruncationMsg,
    codec: &FixedPointCodec,
) -> Result<Vec<u64>> {
    let len = state.shape.out_len();
    if msg.masked.len() != len || msg.result_share.len() != len {
        return Err(Error::protocol(0, "truncation message of the wrong size"));
    }
    let bias = 1u64 << (TRUNCATION_BITS - 1);
    let bias_shifted = bias >> codec.frac_bits;
    Ok((0..len)
        .map(|i| {
            let c = z1[i]
                .wrapping_add(bias)
                .wrapping_add(state.trunc.r[i])
                .wrapping_add(msg.masked[i]);
            (c >> codec.frac_bits)
                .wrapping_sub(bias_shifted)
                .wrapping_sub(state.trunc.r_shifted[i])
                .wrapping_add(msg.result_share[i])
        })
        .collect())
}

/// Reconstructed result of a product where party 1's final share is the
/// whole value; kept for symmetry with the protocol layer.
pub fn combine_result(party1_result: &[u64], codec: &FixedPointCodec) -> Vec<f64> {
    codec.decode_all(party1_result)
}

/// Output of [`simulate_product`].
#[derive(Debug, Clone)]
pub struct SimulatedProduct {
    pub result: Vec<f64>,
    pub opened_e: Vec<u64>,
    pub opened_f: Vec<u64>,
}

/// Runs both parties in-process on already-encoded operands.
pub fn simulate_product<R: Rng + ?Sized>(
    x: &[u64],
    y: &[u64],
    shape: ProductShape,
    codec: &FixedPointCodec,
    dealer_seed: u64,
    rng1: &mut R,
    rng2: &mut R,
) -> Result<SimulatedProduct> {
    if x.len() != shape.lhs_len() || y.len() != shape.rhs_len() {
        return Err(Error::arg("operands do not match the product shape"));
    }
    let mut d1 = Dealer::new(dealer_seed, PartyId::One, codec.frac_bits);
    let mut d2 = Dealer::new(dealer_seed, PartyId::Two, codec.frac_bits);
    let (x1, x2) = split_input(x, rng1);
    let (y2, y1) = split_input(y, rng2);
    let (t1, r1) = d1.next(shape)?;
    let (t2, r2) = d2.next(shape)?;
    let s1 = BeaverState::new(PartyId::One, x1, y1, t1, r1)?;
    let s2 = BeaverState::new(PartyId::Two, x2, y2, t2, r2)?;
    let o1 = masked_open(&s1);
    let o2 = masked_open(&s2);
    let z1 = local_product(&s1, &o1, &o2)?;
    let z2 = local_product(&s2, &o2, &o1)?;
    let msg = truncation_msg(&s2, &z2);
    let out = finish_party1(&s1, &z1, &msg, codec)?;
    Ok(SimulatedProduct {
        result: combine_result(&out, codec),
        opened_e: ring_add(&o1.e, &o2.e),
        opened_f: ring_add(&o1.f, &o2.f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn run(x: &[f64], y: &[f64], shape: ProductShape, seed: u64) -> Vec<f64> {
        let codec = FixedPointCodec::default();
        let mut r1 = ChaCha20Rng::seed_from_u64(seed);
        let mut r2 = ChaCha20Rng::seed_from_u64(seed + 1);
        simulate_product(
            &codec.encode_all(x).unwrap(),
            &codec.encode_all(y).unwrap(),
            shape,
            &codec,
            seed,
            &mut r1,
            &mut r2,
        )
        .unwrap()
        .result
    }

    #[test]
    fn scalar_products_within_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(50);
        let ulp = 2f64.powi(-16);
        for t in 0..1000 {
            let a: f64 = rng.random_range(-100.0..100.0);
            let b: f64 = rng.random_range(-100.0..100.0);
            let got = run(&[a], &[b], ProductShape::new(1, 1, 1), t)[0];
            assert!((got - a * b).abs() <= ulp * (a.abs() + b.abs() + 1.0), "{a}*{b}: {got}");
        }
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let out = run(&[0.0; 12], &[0.3, -0.2, 0.9, 0.5], ProductShape::new(3, 4, 1), 3);
        assert!(out.iter().all(|v| v.abs() <= 2f64.powi(-16)));
    }

    #[test]
    fn negative_products_survive_truncation() {
        let out = run(&[-1.5, 2.0], &[2.0, -3.0], ProductShape::new(1, 2, 1), 4);
        assert!((out[0] + 9.0).abs() <= 2.0 * 2f64.powi(-16));
    }
}
