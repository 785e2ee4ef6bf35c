use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use super::keys::{GaloisKey, PublicKey, PublicKeySet, SecretKey};
use super::params::HeContext;
use super::poly::{self, data_primes, RnsPoly};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Plaintext {
    pub poly: RnsPoly,
    pub scale: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    pub c0: RnsPoly,
    pub c1: RnsPoly,
    pub scale: f64,
    pub level: usize,
}

fn scales_match(a: f64, b: f64) -> bool {
    ((a / b) - 1.0).abs() < 1e-9
}

/// Operations on packed ciphertexts, with counters for rotations and
/// ciphertext-plaintext products.
#[derive(Debug)]
pub struct Evaluator {
    ctx: Arc<HeContext>,
    rotations: AtomicU64,
    mults: AtomicU64,
}

impl Evaluator {
    pub fn new(ctx: Arc<HeContext>) -> Self {
        Self {
            ctx,
            rotations: AtomicU64::new(0),
            mults: AtomicU64::new(0),
        }
    }

    pub fn context(&self) -> &Arc<HeContext> {
        &self.ctx
    }

    /// Key switches performed by slot rotations so far.
    pub fn rotation_count(&self) -> u64 {
        self.rotations.load(Ordering::Relaxed)
    }

    pub fn mult_count(&self) -> u64 {
        self.mults.load(Ordering::Relaxed)
    }

    pub fn encode(&self, values: &[f64], scale: f64, level: usize) -> Result<Plaintext> {
        if values.len() > self.ctx.slots() {
            return Err(Error::He(format!(
                "vector of {} values exceeds {} slots",
                values.len(),
                self.ctx.slots()
            )));
        }
        if level > self.ctx.max_level() {
            return Err(Error::He(format!("level {level} above the modulus chain")));
        }
        let coeffs = self.ctx.encoder.encode(values, scale);
        Ok(Plaintext {
            poly: poly::from_signed(&self.ctx, &coeffs, &data_primes(level)),
            scale,
            level,
        })
    }

    pub fn decode(&self, pt: &Plaintext) -> Vec<f64> {
        let primes = data_primes(pt.level);
        let coeffs = poly::crt_centered(&self.ctx, &poly::to_coeff(&self.ctx, &pt.poly, &primes), &primes);
        let as_f64: Vec<f64> = coeffs.into_iter().map(|c| c as f64).collect();
        self.ctx.encoder.decode(&as_f64, pt.scale)
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, pt: &Plaintext, pk: &PublicKey, rng: &mut R) -> Ciphertext {
        let ctx = &*self.ctx;
        let primes = data_primes(pt.level);
        let v = poly::from_signed(ctx, &poly::ternary(ctx.n(), rng), &primes);
        let e0 = poly::from_signed(ctx, &poly::gaussian(ctx.n(), rng), &primes);
        let e1 = poly::from_signed(ctx, &poly::gaussian(ctx.n(), rng), &primes);
        let mut c0 = poly::mul(ctx, &v, &pk.b.truncated(primes.len()), &primes);
        poly::add_assign(ctx, &mut c0, &e0, &primes);
        poly::add_assign(ctx, &mut c0, &pt.poly, &primes);
        let mut c1 = poly::mul(ctx, &v, &pk.a.truncated(primes.len()), &primes);
        poly::add_assign(ctx, &mut c1, &e1, &primes);
        Ciphertext {
            c0,
            c1,
            scale: pt.scale,
            level: pt.level,
        }
    }

    pub fn encrypt_values<R: Rng + ?Sized>(&self, values: &[f64], pk: &PublicKey, rng: &mut R) -> Result<Ciphertext> {
        let pt = self.encode(values, self.ctx.params.scale, self.ctx.max_level())?;
        Ok(self.encrypt(&pt, pk, rng))
    }

    pub fn decrypt(&self, ct: &Ciphertext, sk: &SecretKey) -> Plaintext {
        let primes = data_primes(ct.level);
        let s = sk.ntt.truncated(primes.len());
        let mut m = poly::mul(&self.ctx, &ct.c1, &s, &primes);
        poly::add_assign(&self.ctx, &mut m, &ct.c0, &primes);
        Plaintext {
            poly: m,
            scale: ct.scale,
            level: ct.level,
        }
    }

    pub fn decrypt_values(&self, ct: &Ciphertext, sk: &SecretKey) -> Vec<f64> {
        self.decode(&self.decrypt(ct, sk))
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        if a.level != b.level {
            return Err(Error::He(format!("level mismatch: {} vs {}", a.level, b.level)));
        }
        if !scales_match(a.scale, b.scale) {
            return Err(Error::He(format!("scale mismatch: {} vs {}", a.scale, b.scale)));
        }
        let primes = data_primes(a.level);
        let mut out = a.clone();
        poly::add_assign(&self.ctx, &mut out.c0, &b.c0, &primes);
        poly::add_assign(&self.ctx, &mut out.c1, &b.c1, &primes);
        Ok(out)
    }

    pub fn add_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        if a.level != pt.level || !scales_match(a.scale, pt.scale) {
            return Err(Error::He(format!(
                "plaintext at (level {}, scale {}) cannot be added to (level {}, scale {})",
                pt.level, pt.scale, a.level, a.scale
            )));
        }
        let mut out = a.clone();
        poly::add_assign(&self.ctx, &mut out.c0, &pt.poly, &data_primes(a.level));
        Ok(out)
    }

    /// Slotwise product; the scale becomes the product of scales.
    pub fn mul_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        if a.level != pt.level {
            return Err(Error::He(format!("level mismatch: {} vs {}", a.level, pt.level)));
        }
        self.mults.fetch_add(1, Ordering::Relaxed);
        let primes = data_primes(a.level);
        Ok(Ciphertext {
            c0: poly::mul(&self.ctx, &a.c0, &pt.poly, &primes),
            c1: poly::mul(&self.ctx, &a.c1, &pt.poly, &primes),
            scale: a.scale * pt.scale,
            level: a.level,
        })
    }

    /// Divides by the last prime of the current level.
    pub fn rescale(&self, a: &Ciphertext) -> Result<Ciphertext> {
        if a.level == 0 {
            return Err(Error::He("modulus chain exhausted: cannot rescale at level 0".into()));
        }
        let ctx = &*self.ctx;
        let last = a.level;
        let q_last = ctx.moduli[last];
        let drop = |p: &RnsPoly| -> RnsPoly {
            let mut top = p.limbs[last].clone();
            ctx.ntt[last].inverse(&mut top);
            let limbs = (0..last)
                .map(|i| {
                    let m = &ctx.moduli[i];
                    let mut t: Vec<u64> = top.iter().map(|&c| m.from_i64(q_last.centered(c))).collect();
                    ctx.ntt[i].forward(&mut t);
                    let inv = m.inv(m.reduce(q_last.q));
                    p.limbs[i]
                        .iter()
                        .zip(&t)
                        .map(|(&x, &y)| m.mul(m.sub(x, y), inv))
                        .collect()
                })
                .collect();
            RnsPoly { limbs }
        };
        Ok(Ciphertext {
            c0: drop(&a.c0),
            c1: drop(&a.c1),
            scale: a.scale / q_last.q as f64,
            level: a.level - 1,
        })
    }

    /// Multiplies by `values` encoded at the scale of the prime that the
    /// following rescale removes, so the output keeps the input's scale.
    pub fn mul_values_rescale(&self, a: &Ciphertext, values: &[f64]) -> Result<Ciphertext> {
        if a.level == 0 {
            return Err(Error::He("no level left for a plaintext product".into()));
        }
        let q = self.ctx.moduli[a.level].q as f64;
        let pt = self.encode(values, q, a.level)?;
        self.rescale(&self.mul_plain(a, &pt)?)
    }

    fn apply_galois(&self, a: &Ciphertext, key: &GaloisKey) -> Result<Ciphertext> {
        let ctx = &*self.ctx;
        let level = a.level;
        let primes = data_primes(level);
        if key.b.len() < level + 1 {
            return Err(Error::He("rotation key does not cover this level".into()));
        }
        let c0 = poly::to_coeff(ctx, &a.c0, &primes);
        let c1 = poly::to_coeff(ctx, &a.c1, &primes);
        let mut c0r = RnsPoly {
            limbs: c0
                .limbs
                .iter()
                .zip(&primes)
                .map(|(l, &p)| poly::automorphism(l, key.galois, ctx.moduli[p].q))
                .collect(),
        };
        poly::to_ntt(ctx, &mut c0r, &primes);
        let c1r: Vec<Vec<u64>> = c1
            .limbs
            .iter()
            .zip(&primes)
            .map(|(l, &p)| poly::automorphism(l, key.galois, ctx.moduli[p].q))
            .collect();
        let (k0, k1) = self.key_switch(&c1r, key, level);
        poly::add_assign(ctx, &mut c0r, &k0, &primes);
        self.rotations.fetch_add(1, Ordering::Relaxed);
        Ok(Ciphertext {
            c0: c0r,
            c1: k1,
            scale: a.scale,
            level,
        })
    }

    /// Per-prime digit decomposition, products with the key over
    /// `q_0..q_level, P`, then division by `P`.
    fn key_switch(&self, digits: &[Vec<u64>], key: &GaloisKey, level: usize) -> (RnsPoly, RnsPoly) {
        let ctx = &*self.ctx;
        let n = ctx.n();
        let special = ctx.special();
        let mut targets: Vec<usize> = data_primes(level);
        targets.push(special);
        let mut acc0 = RnsPoly::zero(n, targets.len());
        let mut acc1 = RnsPoly::zero(n, targets.len());
        for (j, d) in digits.iter().enumerate() {
            for (ti, &t) in targets.iter().enumerate() {
                let m = &ctx.moduli[t];
                let mut digit: Vec<u64> = d.iter().map(|&x| m.reduce(x)).collect();
                ctx.ntt[t].forward(&mut digit);
                let kb = &key.b[j].limbs[t];
                let ka = &key.a[j].limbs[t];
                for i in 0..n {
                    acc0.limbs[ti][i] = m.add(acc0.limbs[ti][i], m.mul(digit[i], kb[i]));
                    acc1.limbs[ti][i] = m.add(acc1.limbs[ti][i], m.mul(digit[i], ka[i]));
                }
            }
        }
        (self.mod_down(acc0, level), self.mod_down(acc1, level))
    }

    fn mod_down(&self, mut acc: RnsPoly, level: usize) -> RnsPoly {
        let ctx = &*self.ctx;
        let special = ctx.special();
        let p_mod = ctx.moduli[special];
        let mut top = acc.limbs.pop().expect("special limb");
        ctx.ntt[special].inverse(&mut top);
        for i in 0..=level {
            let m = &ctx.moduli[i];
            let mut t: Vec<u64> = top.iter().map(|&c| m.from_i64(p_mod.centered(c))).collect();
            ctx.ntt[i].forward(&mut t);
            let inv = m.inv(m.reduce(p_mod.q));
            for (x, y) in acc.limbs[i].iter_mut().zip(&t) {
                *x = m.mul(m.sub(*x, *y), inv);
            }
        }
        acc
    }

    /// Left rotation: slot `i` of the result holds slot `i + step`.
    pub fn rotate(&self, a: &Ciphertext, step: usize, keys: &PublicKeySet) -> Result<Ciphertext> {
        let slots = self.ctx.slots();
        let mut remaining = step % slots;
        let mut out = a.clone();
        let mut bit = 1;
        while remaining > 0 {
            if remaining & 1 == 1 {
                let key = keys
                    .galois
                    .get(&bit)
                    .ok_or_else(|| Error::He(format!("missing rotation key for step {bit}")))?;
                out = self.apply_galois(&out, key)?;
            }
            remaining >>= 1;
            bit <<= 1;
        }
        Ok(out)
    }

    /// Per-row dot products of `rows` with the vector that `a` holds in
    /// every block of `d` slots, `d` the next power of two of the longest
    /// row. Row `r`'s result lands in slot `r·d`; returns `(ct, d)`.
    pub fn dot_plain(&self, a: &Ciphertext, rows: &[Vec<f64>], keys: &PublicKeySet) -> Result<(Ciphertext, usize)> {
        let longest = rows.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let d = longest.next_power_of_two();
        if rows.len() * d > self.ctx.slots() {
            return Err(Error::He(format!(
                "{} rows of block {d} exceed {} slots",
                rows.len(),
                self.ctx.slots()
            )));
        }
        let mut packed = vec![0.0; rows.len() * d];
        for (r, row) in rows.iter().enumerate() {
            packed[r * d..r * d + row.len()].copy_from_slice(row);
        }
        let mut acc = self.mul_values_rescale(a, &packed)?;
        let mut step = 1;
        while step < d {
            let rotated = self.rotate(&acc, step, keys)?;
            acc = self.add(&acc, &rotated)?;
            step <<= 1;
        }
        Ok((acc, d))
    }
}

/// `v` repeated in every block of `d` slots.
pub fn replicate(v: &[f64], d: usize, slots: usize) -> Vec<f64> {
    (0..slots)
        .map(|i| if i % d < v.len() { v[i % d] } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::he::keys::gen_keyset;
    use crate::he::params::HeParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(n: usize) -> (Evaluator, SecretKey, PublicKeySet, ChaCha20Rng) {
        let ctx = HeContext::new(HeParams::with_degree(n)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(80);
        let (sk, keys) = gen_keyset(&ctx, &mut rng, true);
        (Evaluator::new(ctx), sk, keys, rng)
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn encrypt_decrypt_round_trip() {
        let (ev, sk, keys, mut rng) = setup(4096);
        let v: Vec<f64> = (0..2048).map(|i| ((i * 37 % 200) as f64) - 100.0).collect();
        let ct = ev.encrypt_values(&v, keys.public().unwrap(), &mut rng).unwrap();
        assert!(max_err(&ev.decrypt_values(&ct, &sk), &v) <= 1e-4);
        let ct2 = ev.encrypt_values(&v, keys.public().unwrap(), &mut rng).unwrap();
        assert_ne!(ct.c0, ct2.c0);
    }

    #[test]
    fn rotation_moves_slots_left() {
        let (ev, sk, keys, mut rng) = setup(64);
        let v: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let ct = ev.encrypt_values(&v, keys.public().unwrap(), &mut rng).unwrap();
        for step in [0usize, 1, 3, 8, 31] {
            let out = ev.decrypt_values(&ev.rotate(&ct, step, &keys).unwrap(), &sk);
            for i in 0..32 {
                assert!((out[i] - v[(i + step) % 32]).abs() < 1e-3, "step {step} slot {i}");
            }
        }
        let back = ev.rotate(&ev.rotate(&ct, 5, &keys).unwrap(), 27, &keys).unwrap();
        assert!(max_err(&ev.decrypt_values(&back, &sk), &v) < 1e-3);
    }

    #[test]
    fn plaintext_product_and_rescale() {
        let (ev, sk, keys, mut rng) = setup(4096);
        let v: Vec<f64> = (0..2048).map(|i| (i as f64 * 0.01).sin() * 50.0).collect();
        let ct = ev.encrypt_values(&v, keys.public().unwrap(), &mut rng).unwrap();
        let ones = ev.mul_values_rescale(&ct, &vec![1.0; 2048]).unwrap();
        assert_eq!(ones.level, 0);
        assert_eq!(ones.scale, ev.context().params.scale);
        assert!(max_err(&ev.decrypt_values(&ones, &sk), &v) <= 1e-3);
        assert!(ev.rescale(&ones).is_err());
    }

    #[test]
    fn dot_product_of_one_row() {
        let (ev, sk, keys, mut rng) = setup(4096);
        let v: Vec<f64> = (1..=8).map(f64::from).collect();
        let ct = ev.encrypt_values(&v, keys.public().unwrap(), &mut rng).unwrap();
        let (out, d) = ev.dot_plain(&ct, &[vec![1.0; 8]], &keys).unwrap();
        assert_eq!(d, 8);
        assert!((ev.decrypt_values(&out, &sk)[0] - 36.0).abs() < 1e-2);
        let (zero, _) = ev.dot_plain(&ct, &[vec![0.0; 8]], &keys).unwrap();
        assert!(ev.decrypt_values(&zero, &sk)[0].abs() < 1e-3);
    }

    #[test]
    fn mismatched_operands_rejected() {
        let (ev, _sk, keys, mut rng) = setup(64);
        let ct = ev.encrypt_values(&[1.0], keys.public().unwrap(), &mut rng).unwrap();
        let low = ev.mul_values_rescale(&ct, &[1.0]).unwrap();
        assert!(ev.add(&ct, &low).is_err());
        assert!(ev.encode(&[0.0; 33], 1.0, 0).is_err());
        let no_keys = PublicKeySet::default();
        assert!(ev.rotate(&ct, 1, &no_keys).is_err());
    }
}
