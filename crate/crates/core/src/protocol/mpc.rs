//! Beaver products carried over frames.
//!
//! Frames strictly alternate direction, so neither party ever blocks on a
//! send while its peer is also sending.

use rand_chacha::ChaCha20Rng;

use super::endpoint::Endpoint;
use super::frame::{FrameType, Phase};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::mpc::wire::{self, MSG_INPUT_SHARE, MSG_MASK_E, MSG_MASK_F, MSG_RESULT_SHARE, MSG_TRUNC_MASKED};
use crate::mpc::{
    finish_party1, local_product, masked_open, split_input, truncation_msg, BeaverState, Dealer, FixedPointCodec,
    MaskedOpen, PartyId, ProductShape, TruncationMsg,
};
use crate::util::fnv1a64;

pub(crate) struct MpcParty {
    dealer: Dealer,
    codec: FixedPointCodec,
    rng: ChaCha20Rng,
}

/// Dealer seed shared by both parties' simulated dealer streams.
pub fn dealer_seed(session_seed: u64) -> u64 {
    let mut b = b"dealer".to_vec();
    b.extend_from_slice(&session_seed.to_le_bytes());
    fnv1a64(&b)
}

impl MpcParty {
    pub fn new(party: PartyId, session_seed: u64, frac_bits: u32, rng: ChaCha20Rng) -> Self {
        Self {
            dealer: Dealer::new(dealer_seed(session_seed), party, frac_bits),
            codec: FixedPointCodec::new(frac_bits),
            rng,
        }
    }
}

fn send_share(ep: &mut Endpoint, msg: u16, shape: &[usize], data: &[u64]) -> Result<()> {
    let payload = wire::encode(msg, ep.round() as u16, shape, data)?;
    ep.send(FrameType::Share, payload)
}

fn recv_share(ep: &mut Endpoint, msg: u16, shape: &[usize]) -> Result<Vec<u64>> {
    let frame = ep.recv(FrameType::Share)?;
    let d = wire::decode(&frame.payload)?;
    if d.msg_type != msg {
        return Err(ep.protocol_error(format!("share message type {} where {msg} was expected", d.msg_type)));
    }
    if d.tensor.shape != shape {
        return Err(ep.protocol_error(format!(
            "share of shape {:?} where {shape:?} was expected",
            d.tensor.shape
        )));
    }
    Ok(d.tensor.data)
}

/// Party 1 with `x` (`k × n`, already normalized); returns `x · y`.
pub(crate) fn party1_product(ep: &mut Endpoint, st: &mut MpcParty, x: &Matrix, m: usize) -> Result<Matrix> {
    let (k, n) = (x.rows(), x.cols());
    let shape = ProductShape::new(k, n, m);
    ep.set_phase(Phase::Preprocess);
    let (triple, trunc) = st.dealer.next(shape)?;

    ep.set_phase(Phase::Input);
    let encoded = st.codec.encode_all(x.data())?;
    let (keep, sent) = split_input(&encoded, &mut st.rng);
    send_share(ep, MSG_INPUT_SHARE, &[k, n], &sent)?;
    let y1 = recv_share(ep, MSG_INPUT_SHARE, &[n, m])?;
    let state = BeaverState::new(PartyId::One, keep, y1, triple, trunc)?;

    ep.set_phase(Phase::Open);
    let own = masked_open(&state);
    send_share(ep, MSG_MASK_E, &[k, n], &own.e)?;
    send_share(ep, MSG_MASK_F, &[n, m], &own.f)?;
    let peer = MaskedOpen {
        e: recv_share(ep, MSG_MASK_E, &[k, n])?,
        f: recv_share(ep, MSG_MASK_F, &[n, m])?,
    };
    let z1 = local_product(&state, &own, &peer)?;

    ep.set_phase(Phase::Truncate);
    let msg = TruncationMsg {
        masked: recv_share(ep, MSG_TRUNC_MASKED, &[k, m])?,
        result_share: recv_share(ep, MSG_RESULT_SHARE, &[k, m])?,
    };
    let out = finish_party1(&state, &z1, &msg, &st.codec)?;
    ep.set_phase(Phase::Result);
    let result = Matrix::from_vec(k, m, st.codec.decode_all(&out))?;
    ep.flush();
    Ok(result)
}

/// Party 2 with `y` (`n × m`) against a `k`-row left operand.
pub(crate) fn party2_product(ep: &mut Endpoint, st: &mut MpcParty, y: &Matrix, k: usize) -> Result<()> {
    let (n, m) = (y.rows(), y.cols());
    let shape = ProductShape::new(k, n, m);
    ep.set_phase(Phase::Preprocess);
    let (triple, trunc) = st.dealer.next(shape)?;

    ep.set_phase(Phase::Input);
    let encoded = st.codec.encode_all(y.data())?;
    let x2 = recv_share(ep, MSG_INPUT_SHARE, &[k, n])?;
    let (keep, sent) = split_input(&encoded, &mut st.rng);
    send_share(ep, MSG_INPUT_SHARE, &[n, m], &sent)?;
    let state = BeaverState::new(PartyId::Two, x2, keep, triple, trunc)?;

    ep.set_phase(Phase::Open);
    let peer = MaskedOpen {
        e: recv_share(ep, MSG_MASK_E, &[k, n])?,
        f: recv_share(ep, MSG_MASK_F, &[n, m])?,
    };
    let own = masked_open(&state);
    send_share(ep, MSG_MASK_E, &[k, n], &own.e)?;
    send_share(ep, MSG_MASK_F, &[n, m], &own.f)?;
    let z2 = local_product(&state, &own, &peer)?;

    ep.set_phase(Phase::Truncate);
    let msg = truncation_msg(&state, &z2);
    send_share(ep, MSG_TRUNC_MASKED, &[k, m], &msg.masked)?;
    send_share(ep, MSG_RESULT_SHARE, &[k, m], &msg.result_share)?;
    ep.flush();
    Ok(())
}
