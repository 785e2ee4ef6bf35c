//! Simulated trusted dealer.
//!
//! Both parties hold a dealer seeded identically; triple `id` is drawn from
//! ChaCha stream `id`, and each party keeps only its own share. Ids are
//! handed out in increasing order and never revisited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ring::{ring_matmul, ring_sub};
use super::share::PartyId;
use crate::error::{Error, Result};

/// `(k × n) · (n × m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductShape {
    pub k: usize,
    pub n: usize,
    pub m: usize,
}

impl ProductShape {
    pub fn new(k: usize, n: usize, m: usize) -> Self {
        Self { k, n, m }
    }

    pub fn lhs_len(&self) -> usize {
        self.k * self.n
    }

    pub fn rhs_len(&self) -> usize {
        self.n * self.m
    }

    pub fn out_len(&self) -> usize {
        self.k * self.m
    }
}

/// One party's share of `(U, V, W = U·V)`.
#[derive(Debug, Clone)]
pub struct TripleShare {
    pub id: u64,
    pub shape: ProductShape,
    pub u: Vec<u64>,
    pub v: Vec<u64>,
    pub w: Vec<u64>,
}

/// One party's share of `r` uniform in `[0, 2^63)` and of `⌊r / 2^f⌋`.
#[derive(Debug, Clone)]
pub struct TruncationShare {
    pub r: Vec<u64>,
    pub r_shifted: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct Dealer {
    seed: u64,
    party: PartyId,
    frac_bits: u32,
    next_id: u64,
    capacity: u64,
}

fn random_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<u64> {
    (0..n).map(|_| rng.random()).collect()
}

impl Dealer {
    pub fn new(seed: u64, party: PartyId, frac_bits: u32) -> Self {
        Self {
            seed,
            party,
            frac_bits,
            next_id: 0,
            capacity: u64::MAX,
        }
    }

    /// Limits the number of triples this dealer will hand out.
    pub fn with_capacity(mut self, capacity: u64) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn issued(&self) -> u64 {
        self.next_id
    }

    pub fn next(&mut self, shape: ProductShape) -> Result<(TripleShare, TruncationShare)> {
        let id = self.next_id;
        self.take(id, shape)
    }

    /// Hands out triple `id`; ids below the high-water mark are spent.
    pub fn take(&mut self, id: u64, shape: ProductShape) -> Result<(TripleShare, TruncationShare)> {
        if id < self.next_id {
            return Err(Error::protocol(id as u32, format!("triple {id} already consumed")));
        }
        if id >= self.capacity {
            return Err(Error::protocol(
                id as u32,
                format!(
                    "triple pool exhausted after {} triples; regenerate preprocessing",
                    self.capacity
                ),
            ));
        }
        self.next_id = id + 1;
        Ok(self.generate(id, shape))
    }

    fn generate(&self, id: u64, shape: ProductShape) -> (TripleShare, TruncationShare) {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        let u = random_vec(&mut rng, shape.lhs_len());
        let v = random_vec(&mut rng, shape.rhs_len());
        let u1 = random_vec(&mut rng, shape.lhs_len());
        let v1 = random_vec(&mut rng, shape.rhs_len());
        let w1 = random_vec(&mut rng, shape.out_len());
        let r: Vec<u64> = (0..shape.out_len()).map(|_| rng.random::<u64>() >> 1).collect();
        let r1 = random_vec(&mut rng, shape.out_len());
        let rs1 = random_vec(&mut rng, shape.out_len());
        match self.party {
            PartyId::One => (
                TripleShare {
                    id,
                    shape,
                    u: u1,
                    v: v1,
                    w: w1,
                },
                TruncationShare { r: r1, r_shifted: rs1 },
            ),
            PartyId::Two => {
                let w = ring_matmul(&u, &v, shape.k, shape.n, shape.m);
                let shifted: Vec<u64> = r.iter().map(|x| x >> self.frac_bits).collect();
                (
                    TripleShare {
                        id,
                        shape,
                        u: ring_sub(&u, &u1),
                        v: ring_sub(&v, &v1),
                        w: ring_sub(&w, &w1),
                    },
                    TruncationShare {
                        r: ring_sub(&r, &r1),
                        r_shifted: ring_sub(&shifted, &rs1),
                    },
                )
            }
        }
    }
}
