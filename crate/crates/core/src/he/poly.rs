//! Polynomials in RNS form. Each limb belongs to one entry of
//! `HeContext::moduli`; the mapping is passed explicitly as `primes`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::HeContext;

pub const ERROR_SIGMA: f64 = 3.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsPoly {
    pub limbs: Vec<Vec<u64>>,
}

impl RnsPoly {
    pub fn zero(n: usize, count: usize) -> Self {
        Self {
            limbs: vec![vec![0; n]; count],
        }
    }

    pub fn truncated(&self, count: usize) -> Self {
        Self {
            limbs: self.limbs[..count].to_vec(),
        }
    }
}

pub fn data_primes(level: usize) -> Vec<usize> {
    (0..=level).collect()
}

/// Small signed coefficients lifted to the given primes, in NTT form.
pub fn from_signed(ctx: &HeContext, coeffs: &[i64], primes: &[usize]) -> RnsPoly {
    RnsPoly {
        limbs: primes
            .iter()
            .map(|&p| {
                let m = &ctx.moduli[p];
                let mut limb: Vec<u64> = coeffs.iter().map(|&c| m.from_i64(c)).collect();
                ctx.ntt[p].forward(&mut limb);
                limb
            })
            .collect(),
    }
}

/// Uniform polynomial; uniform in the evaluation domain is uniform overall.
pub fn uniform<R: Rng + ?Sized>(ctx: &HeContext, primes: &[usize], rng: &mut R) -> RnsPoly {
    RnsPoly {
        limbs: primes
            .iter()
            .map(|&p| {
                let q = ctx.moduli[p].q;
                (0..ctx.n()).map(|_| rng.random_range(0..q)).collect()
            })
            .collect(),
    }
}

pub fn ternary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-1i64..=1)).collect()
}

pub fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    let normal = Normal::new(0.0, ERROR_SIGMA).expect("valid sigma");
    let bound = 6.0 * ERROR_SIGMA;
    (0..n)
        .map(|_| normal.sample(rng).clamp(-bound, bound).round() as i64)
        .collect()
}

pub fn add_assign(ctx: &HeContext, a: &mut RnsPoly, b: &RnsPoly, primes: &[usize]) {
    for ((la, lb), &p) in a.limbs.iter_mut().zip(&b.limbs).zip(primes) {
        let m = &ctx.moduli[p];
        for (x, y) in la.iter_mut().zip(lb) {
            *x = m.add(*x, *y);
        }
    }
}

pub fn mul(ctx: &HeContext, a: &RnsPoly, b: &RnsPoly, primes: &[usize]) -> RnsPoly {
    RnsPoly {
        limbs: a
            .limbs
            .iter()
            .zip(&b.limbs)
            .zip(primes)
            .map(|((la, lb), &p)| {
                let m = &ctx.moduli[p];
                la.iter().zip(lb).map(|(x, y)| m.mul(*x, *y)).collect()
            })
            .collect(),
    }
}

pub fn neg(ctx: &HeContext, a: &RnsPoly, primes: &[usize]) -> RnsPoly {
    RnsPoly {
        limbs: a
            .limbs
            .iter()
            .zip(primes)
            .map(|(l, &p)| l.iter().map(|&x| ctx.moduli[p].neg(x)).collect())
            .collect(),
    }
}

pub fn to_coeff(ctx: &HeContext, a: &RnsPoly, primes: &[usize]) -> RnsPoly {
    let mut out = a.clone();
    for (l, &p) in out.limbs.iter_mut().zip(primes) {
        ctx.ntt[p].inverse(l);
    }
    out
}

pub fn to_ntt(ctx: &HeContext, a: &mut RnsPoly, primes: &[usize]) {
    for (l, &p) in a.limbs.iter_mut().zip(primes) {
        ctx.ntt[p].forward(l);
    }
}

/// `a(X) -> a(X^g)` on one coefficient-form limb modulo `q`.
pub fn automorphism(limb: &[u64], g: usize, q: u64) -> Vec<u64> {
    let n = limb.len();
    let two_n = 2 * n;
    let mut out = vec![0u64; n];
    for (i, &c) in limb.iter().enumerate() {
        let j = (i * g) % two_n;
        if j < n {
            out[j] = c;
        } else {
            out[j - n] = if c == 0 { 0 } else { q - c };
        }
    }
    out
}

/// Exact signed coefficients of a coefficient-form polynomial over the
/// given primes (Garner reconstruction, centred).
pub fn crt_centered(ctx: &HeContext, a: &RnsPoly, primes: &[usize]) -> Vec<i128> {
    let n = ctx.n();
    let mut out = vec![0i128; n];
    let big_q: u128 = primes.iter().map(|&p| ctx.moduli[p].q as u128).product();
    for (i, o) in out.iter_mut().enumerate() {
        let mut x: u128 = a.limbs[0][i] as u128;
        let mut acc: u128 = ctx.moduli[primes[0]].q as u128;
        for (k, &p) in primes.iter().enumerate().skip(1) {
            let m = &ctx.moduli[p];
            let xr = (x % m.q as u128) as u64;
            let diff = m.sub(a.limbs[k][i], xr);
            let acc_mod = (acc % m.q as u128) as u64;
            let t = m.mul(diff, m.inv(acc_mod));
            x += acc * t as u128;
            acc *= m.q as u128;
        }
        *o = if x > big_q / 2 {
            x as i128 - big_q as i128
        } else {
            x as i128
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::he::params::HeParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crt_recovers_signed_values() {
        let ctx = HeContext::new(HeParams::with_degree(16)).unwrap();
        let vals: Vec<i64> = (0..16).map(|i| (i as i64 - 8) * 123_456_789_012).collect();
        let primes = data_primes(1);
        let p = to_coeff(&ctx, &from_signed(&ctx, &vals, &primes), &primes);
        let back = crt_centered(&ctx, &p, &primes);
        for (a, b) in vals.iter().zip(&back) {
            assert_eq!(*a as i128, *b);
        }
    }

    #[test]
    fn automorphism_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let q = 97;
        let a: Vec<u64> = (0..8).map(|_| rng.random_range(0..q)).collect();
        let twice = automorphism(&automorphism(&a, 5, q), 5, q);
        assert_eq!(twice, automorphism(&a, 25 % 16, q));
        assert_eq!(automorphism(&a, 1, q), a);
    }
}
