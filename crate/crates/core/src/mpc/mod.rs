//! Two-party additive secret sharing over `Z_{2^64}` with fixed-point values.
//!
//! Products follow the Beaver-triple recipe with a simulated trusted dealer;
//! a dealer-assisted truncation brings the `2f` fractional bits of a
//! product back to `f`.

mod beaver;
mod codec;
mod dealer;
mod ring;
mod share;
pub mod wire;

pub use beaver::{
    combine_result, finish_party1, local_product, masked_open, simulate_product, split_input, truncation_msg,
    BeaverState, MaskedOpen, SimulatedProduct, TruncationMsg,
};
pub use codec::{FixedPointCodec, DEFAULT_FRAC_BITS, TRUNCATION_BITS};
pub use dealer::{Dealer, ProductShape, TripleShare, TruncationShare};
pub use ring::{ring_add, ring_matmul, ring_sub};
pub use share::{make_shares, mpc_add, reconstruct, PartyId, RingTensor, Share};

/// Chi-square statistic of the top four bits of `values` against 16 equal buckets.
pub fn chi_square_top_bits(values: &[u64]) -> f64 {
    let mut counts = [0u64; 16];
    for &v in values {
        counts[(v >> 60) as usize] += 1;
    }
    let expected = values.len() as f64 / 16.0;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// 99.9% quantile of the chi-square distribution with 15 degrees of freedom.
pub const CHI2_15_CRITICAL: f64 = 37.697;
