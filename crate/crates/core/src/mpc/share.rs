use rand::Rng;

use super::ring::{ring_add, ring_sub};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartyId {
    One,
    Two,
}

impl PartyId {
    pub fn index(self) -> usize {
        match self {
            PartyId::One => 0,
            PartyId::Two => 1,
        }
    }

    pub fn peer(self) -> PartyId {
        match self {
            PartyId::One => PartyId::Two,
            PartyId::Two => PartyId::One,
        }
    }
}

/// Shaped tensor of ring elements, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTensor {
    pub shape: Vec<usize>,
    pub data: Vec<u64>,
}

impl RingTensor {
    pub fn new(shape: Vec<usize>, data: Vec<u64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Integrity(format!(
                "tensor shape {shape:?} holds {n} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub party: PartyId,
    pub tensor: RingTensor,
}

/// Party 1's share is uniform; party 2's is the remainder.
pub fn make_shares<R: Rng + ?Sized>(secret: &RingTensor, rng: &mut R) -> (Share, Share) {
    let s1: Vec<u64> = (0..secret.len()).map(|_| rng.random()).collect();
    let s2 = ring_sub(&secret.data, &s1);
    (
        Share {
            party: PartyId::One,
            tensor: RingTensor {
                shape: secret.shape.clone(),
                data: s1,
            },
        },
        Share {
            party: PartyId::Two,
            tensor: RingTensor {
                shape: secret.shape.clone(),
                data: s2,
            },
        },
    )
}

pub fn reconstruct(a: &Share, b: &Share) -> Result<RingTensor> {
    if a.party == b.party {
        return Err(Error::arg("reconstruct needs one share from each party"));
    }
    if a.tensor.shape != b.tensor.shape {
        return Err(Error::arg(format!(
            "share shapes differ: {:?} vs {:?}",
            a.tensor.shape, b.tensor.shape
        )));
    }
    Ok(RingTensor {
        shape: a.tensor.shape.clone(),
        data: ring_add(&a.tensor.data, &b.tensor.data),
    })
}

/// Local addition of two shares held by the same party.
pub fn mpc_add(x: &Share, y: &Share) -> Result<Share> {
    if x.party != y.party {
        return Err(Error::arg("mpc_add: shares belong to different parties"));
    }
    if x.tensor.shape != y.tensor.shape {
        return Err(Error::arg(format!(
            "mpc_add: shapes {:?} and {:?}",
            x.tensor.shape, y.tensor.shape
        )));
    }
    Ok(Share {
        party: x.party,
        tensor: RingTensor {
            shape: x.tensor.shape.clone(),
            data: ring_add(&x.tensor.data, &y.tensor.data),
        },
    })
}
