//! Word-size modular arithmetic, prime search and negacyclic roots.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    pub q: u64,
    ratio_lo: u64,
    ratio_hi: u64,
}

impl Modulus {
    pub fn new(q: u64) -> Self {
        assert!(q > 2 && q < (1 << 62), "modulus out of range");
        let ratio = u128::MAX / q as u128;
        Self {
            q,
            ratio_lo: ratio as u64,
            ratio_hi: (ratio >> 64) as u64,
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    /// Barrett reduction of a 128-bit value.
    #[inline]
    pub fn reduce_u128(&self, z: u128) -> u64 {
        let z0 = z as u64;
        let z1 = (z >> 64) as u64;
        let carry = ((z0 as u128 * self.ratio_lo as u128) >> 64) as u64;
        let t = z0 as u128 * self.ratio_hi as u128;
        let (tmp1, c1) = (t as u64).overflowing_add(carry);
        let tmp3 = ((t >> 64) as u64).wrapping_add(c1 as u64);
        let t = z1 as u128 * self.ratio_lo as u128;
        let (_, c2) = tmp1.overflowing_add(t as u64);
        let carry = ((t >> 64) as u64).wrapping_add(c2 as u64);
        let quot = z1.wrapping_mul(self.ratio_hi).wrapping_add(tmp3).wrapping_add(carry);
        let r = z0.wrapping_sub(quot.wrapping_mul(self.q));
        if r >= self.q {
            r - self.q
        } else {
            r
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.q
    }

    pub fn from_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.q as i64);
        r as u64
    }

    pub fn from_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.q as i128) as u64
    }

    /// Representative in `(-q/2, q/2]`.
    #[inline]
    pub fn centered(&self, a: u64) -> i64 {
        if a > self.q / 2 {
            a as i64 - self.q as i64
        } else {
            a as i64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by Fermat's little theorem; `q` must be prime.
    pub fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.q - 2)
    }

    /// Shoup companion `⌊w · 2^64 / q⌋` for repeated multiplication by `w`.
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.q as u128) as u64
    }

    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let hi = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(hi.wrapping_mul(self.q));
        if r >= self.q {
            r - self.q
        } else {
            r
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Largest prime `p < 2^bits` with `p ≡ 1 (mod step)`, skipping `exclude`.
pub fn prime_below(bits: u32, step: u64, exclude: &[u64]) -> u64 {
    let mut p = ((1u64 << bits) - 1) / step * step + 1;
    while p >= 1u64 << bits || !is_prime(p) || exclude.contains(&p) {
        p -= step;
    }
    p
}

/// Smallest prime `p > 2^bits` with `p ≡ 1 (mod step)`.
pub fn prime_above(bits: u32, step: u64) -> u64 {
    let mut p = (1u64 << bits) / step * step + 1;
    while p <= 1u64 << bits || !is_prime(p) {
        p += step;
    }
    p
}

/// Smallest primitive `2n`-th root of unity modulo prime `q`.
pub fn primitive_root_2n(m: &Modulus, two_n: u64) -> u64 {
    let exp = (m.q - 1) / two_n;
    (2..m.q)
        .map(|x| m.pow(x, exp))
        .find(|&g| m.pow(g, two_n / 2) == m.q - 1)
        .expect("q must be 1 mod 2n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn barrett_and_shoup_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for &q in &[
            prime_below(50, 8192, &[]),
            prime_above(30, 8192),
            prime_below(60, 8192, &[]),
            97,
        ] {
            let m = Modulus::new(q);
            for _ in 0..2000 {
                let a = rng.random_range(0..q);
                let b = rng.random_range(0..q);
                assert_eq!(m.mul(a, b), mul_mod(a, b, q));
                assert_eq!(m.mul_shoup(a, b, m.shoup(b)), mul_mod(a, b, q));
                let z: u128 = rng.random();
                assert_eq!(m.reduce_u128(z), (z % q as u128) as u64);
            }
            assert_eq!(m.mul(m.inv(12345 % q), 12345 % q), 1);
        }
    }

    #[test]
    fn primes_have_the_right_shape() {
        let q = prime_below(50, 8192, &[]);
        assert!(is_prime(q) && q % 8192 == 1 && q < 1 << 50 && q > 1 << 49);
        let q1 = prime_above(30, 8192);
        assert!(is_prime(q1) && q1 % 8192 == 1 && q1 > 1 << 30);
        assert!(!is_prime(561) && !is_prime(1 << 40) && is_prime(65537));
        let other = prime_below(50, 8192, &[q]);
        assert!(other < q && is_prime(other));
    }

    #[test]
    fn negacyclic_root() {
        let m = Modulus::new(prime_above(30, 64));
        let g = primitive_root_2n(&m, 64);
        assert_eq!(m.pow(g, 32), m.q - 1);
        assert_eq!(m.pow(g, 64), 1);
    }
}
