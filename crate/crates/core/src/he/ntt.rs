//! Negacyclic number-theoretic transform over `Z_q[X]/(X^N + 1)`.
//!
//! Forward output is in bit-reversed order; pointwise products in that
//! domain correspond to negacyclic convolution.

use super::arith::{primitive_root_2n, Modulus};

#[derive(Debug, Clone)]
pub struct NttTable {
    n: usize,
    modulus: Modulus,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    psi_inv_rev: Vec<u64>,
    psi_inv_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

fn bit_reverse(mut x: usize, bits: u32) -> usize {
    let mut r = 0;
    for _ in 0..bits {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    r
}

impl NttTable {
    pub fn new(n: usize, modulus: Modulus) -> Self {
        assert!(n.is_power_of_two() && n >= 2);
        let bits = n.trailing_zeros();
        let psi = primitive_root_2n(&modulus, 2 * n as u64);
        let psi_inv = modulus.inv(psi);
        let mut psi_rev = vec![0; n];
        let mut psi_inv_rev = vec![0; n];
        for i in 0..n {
            let r = bit_reverse(i, bits) as u64;
            psi_rev[i] = modulus.pow(psi, r);
            psi_inv_rev[i] = modulus.pow(psi_inv, r);
        }
        let psi_rev_shoup = psi_rev.iter().map(|&w| modulus.shoup(w)).collect();
        let psi_inv_rev_shoup = psi_inv_rev.iter().map(|&w| modulus.shoup(w)).collect();
        let n_inv = modulus.inv(n as u64);
        Self {
            n,
            modulus,
            psi_rev,
            psi_rev_shoup,
            psi_inv_rev,
            psi_inv_rev_shoup,
            n_inv,
            n_inv_shoup: modulus.shoup(n_inv),
        }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let m_ = &self.modulus;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let j1 = 2 * i * t;
                let w = self.psi_rev[m + i];
                let wp = self.psi_rev_shoup[m + i];
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = m_.mul_shoup(*y, w, wp);
                    *x = m_.add(u, v);
                    *y = m_.sub(u, v);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let m_ = &self.modulus;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let j1 = 2 * i * t;
                let w = self.psi_inv_rev[h + i];
                let wp = self.psi_inv_rev_shoup[h + i];
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = m_.add(u, v);
                    *y = m_.mul_shoup(m_.sub(u, v), w, wp);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = m_.mul_shoup(*x, self.n_inv, self.n_inv_shoup);
        }
    }
}
