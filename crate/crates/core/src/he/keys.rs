use std::collections::BTreeMap;

use rand::Rng;

use super::params::HeContext;
use super::poly::{self, RnsPoly};

/// Ternary secret, kept in NTT form over every prime including `P`.
#[derive(Debug, Clone)]
pub struct SecretKey {
    pub coeffs: Vec<i64>,
    pub ntt: RnsPoly,
}

/// `(b, a)` with `b = -a·s + e` over the data primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub b: RnsPoly,
    pub a: RnsPoly,
}

/// Key-switching material from `s(X^g)` back to `s`, one entry per RNS
/// digit, each over the data primes followed by `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisKey {
    pub step: usize,
    pub galois: usize,
    pub b: Vec<RnsPoly>,
    pub a: Vec<RnsPoly>,
}

/// Keys a party hands to its peer.
#[derive(Debug, Clone, Default)]
pub struct PublicKeySet {
    pub public: Option<PublicKey>,
    pub galois: BTreeMap<usize, GaloisKey>,
}

impl PublicKeySet {
    pub fn public(&self) -> crate::error::Result<&PublicKey> {
        self.public
            .as_ref()
            .ok_or_else(|| crate::error::Error::He("no public key loaded".into()))
    }
}

fn all_primes(ctx: &HeContext) -> Vec<usize> {
    (0..ctx.moduli.len()).collect()
}

pub fn gen_secret_key<R: Rng + ?Sized>(ctx: &HeContext, rng: &mut R) -> SecretKey {
    let coeffs = poly::ternary(ctx.n(), rng);
    let ntt = poly::from_signed(ctx, &coeffs, &all_primes(ctx));
    SecretKey { coeffs, ntt }
}

pub fn gen_public_key<R: Rng + ?Sized>(ctx: &HeContext, sk: &SecretKey, rng: &mut R) -> PublicKey {
    let primes = poly::data_primes(ctx.max_level());
    let a = poly::uniform(ctx, &primes, rng);
    let e = poly::from_signed(ctx, &poly::gaussian(ctx.n(), rng), &primes);
    let s = sk.ntt.truncated(primes.len());
    let mut b = poly::neg(ctx, &poly::mul(ctx, &a, &s, &primes), &primes);
    poly::add_assign(ctx, &mut b, &e, &primes);
    PublicKey { b, a }
}

pub fn gen_galois_key<R: Rng + ?Sized>(ctx: &HeContext, sk: &SecretKey, step: usize, rng: &mut R) -> GaloisKey {
    let g = ctx.encoder.galois_element(step);
    let primes = all_primes(ctx);
    let n_data = ctx.max_level() + 1;
    let rotated: Vec<i64> = {
        let mut out = vec![0i64; ctx.n()];
        for (i, &c) in sk.coeffs.iter().enumerate() {
            let j = (i * g) % (2 * ctx.n());
            if j < ctx.n() {
                out[j] = c;
            } else {
                out[j - ctx.n()] = -c;
            }
        }
        out
    };
    let s_rot = poly::from_signed(ctx, &rotated, &primes);
    let special_q = ctx.moduli[ctx.special()].q;
    let mut bs = Vec::with_capacity(n_data);
    let mut as_ = Vec::with_capacity(n_data);
    for j in 0..n_data {
        let a = poly::uniform(ctx, &primes, rng);
        let e = poly::from_signed(ctx, &poly::gaussian(ctx.n(), rng), &primes);
        let mut b = poly::neg(ctx, &poly::mul(ctx, &a, &sk.ntt, &primes), &primes);
        poly::add_assign(ctx, &mut b, &e, &primes);
        let m = &ctx.moduli[j];
        let p_mod = m.reduce(special_q);
        for (x, s) in b.limbs[j].iter_mut().zip(&s_rot.limbs[j]) {
            *x = m.add(*x, m.mul(p_mod, *s));
        }
        bs.push(b);
        as_.push(a);
    }
    GaloisKey {
        step,
        galois: g,
        b: bs,
        a: as_,
    }
}

/// Secret key plus public material covering rotations by powers of two.
pub fn gen_keyset<R: Rng + ?Sized>(ctx: &HeContext, rng: &mut R, with_rotations: bool) -> (SecretKey, PublicKeySet) {
    let sk = gen_secret_key(ctx, rng);
    let pk = gen_public_key(ctx, &sk, rng);
    let mut galois = BTreeMap::new();
    if with_rotations {
        let mut step = 1;
        while step < ctx.slots() {
            galois.insert(step, gen_galois_key(ctx, &sk, step, rng));
            step <<= 1;
        }
    }
    (
        sk,
        PublicKeySet {
            public: Some(pk),
            galois,
        },
    )
}
