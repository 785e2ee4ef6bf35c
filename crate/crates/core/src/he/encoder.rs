//! Canonical-embedding encoder.
//!
//! Slot `j` holds the evaluation of the message polynomial at
//! `ζ^(5^j)`, `ζ = exp(2πi / 2N)`; the special FFT below evaluates and
//! interpolates on that orbit in `O(N log N)`.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    m: usize,
    rot_group: Vec<usize>,
    ksi: Vec<Complex64>,
}

fn bit_reverse_in_place<T>(v: &mut [T]) {
    let n = v.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            v.swap(i, j);
        }
    }
}

impl Encoder {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let mut rot_group = Vec::with_capacity(n / 2);
        let mut g = 1usize;
        for _ in 0..n / 2 {
            rot_group.push(g);
            g = g * 5 % m;
        }
        let ksi = (0..=m)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
            .collect();
        Self { n, m, rot_group, ksi }
    }

    pub fn slots(&self) -> usize {
        self.n / 2
    }

    /// Galois element realizing a left rotation by `step` slots.
    pub fn galois_element(&self, step: usize) -> usize {
        self.rot_group[step % self.slots()]
    }

    fn special_fft(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        bit_reverse_in_place(vals);
        let mut len = 2;
        while len <= size {
            let lenh = len >> 1;
            let lenq = len << 2;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * self.m / lenq;
                    let u = vals[i + j];
                    let v = vals[i + j + lenh] * self.ksi[idx];
                    vals[i + j] = u + v;
                    vals[i + j + lenh] = u - v;
                }
            }
            len <<= 1;
        }
    }

    fn special_fft_inv(&self, vals: &mut [Complex64]) {
        let size = vals.len();
        let mut len = size;
        while len >= 1 {
            let lenh = len >> 1;
            let lenq = len << 2;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (lenq - self.rot_group[j] % lenq) * self.m / lenq;
                    let u = vals[i + j] + vals[i + j + lenh];
                    let v = (vals[i + j] - vals[i + j + lenh]) * self.ksi[idx];
                    vals[i + j] = u;
                    vals[i + j + lenh] = v;
                }
            }
            len >>= 1;
        }
        bit_reverse_in_place(vals);
        let inv = 1.0 / size as f64;
        for v in vals.iter_mut() {
            *v *= inv;
        }
    }

    /// Real slot values to rounded integer coefficients at `scale`.
    pub fn encode(&self, values: &[f64], scale: f64) -> Vec<i64> {
        let slots = self.slots();
        debug_assert!(values.len() <= slots);
        let mut vals = vec![Complex64::new(0.0, 0.0); slots];
        for (v, &x) in vals.iter_mut().zip(values) {
            v.re = x;
        }
        self.special_fft_inv(&mut vals);
        let mut coeffs = vec![0i64; self.n];
        for (i, v) in vals.iter().enumerate() {
            coeffs[i] = (v.re * scale).round() as i64;
            coeffs[i + slots] = (v.im * scale).round() as i64;
        }
        coeffs
    }

    /// Signed coefficients back to real slot values.
    pub fn decode(&self, coeffs: &[f64], scale: f64) -> Vec<f64> {
        let slots = self.slots();
        let mut vals: Vec<Complex64> = (0..slots)
            .map(|i| Complex64::new(coeffs[i] / scale, coeffs[i + slots] / scale))
            .collect();
        self.special_fft(&mut vals);
        vals.into_iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decode_is_evaluation_on_the_orbit() {
        let n = 16;
        let enc = Encoder::new(n);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0f64).round()).collect();
        let got = enc.decode(&coeffs, 1.0);
        for (j, g) in got.iter().enumerate() {
            let e = enc.rot_group[j];
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, c) in coeffs.iter().enumerate() {
                acc += enc.ksi[(i * e) % (2 * n)] * *c;
            }
            assert!((acc.re - g).abs() < 1e-9, "slot {j}: {} vs {g}", acc.re);
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let enc = Encoder::new(4096);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let v: Vec<f64> = (0..1024).map(|_| rng.random_range(-100.0..100.0)).collect();
        let scale = (1u64 << 30) as f64;
        let c: Vec<f64> = enc.encode(&v, scale).into_iter().map(|x| x as f64).collect();
        let back = enc.decode(&c, scale);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(back[1024..].iter().all(|x| x.abs() <= 1e-6));
        assert!(enc.encode(&[0.0; 8], scale).iter().all(|&x| x == 0));
    }

    #[test]
    fn encoding_is_linear() {
        let enc = Encoder::new(256);
        let scale = (1u64 << 30) as f64;
        let v: Vec<f64> = (0..128).map(|i| (i as f64).sin() * 10.0).collect();
        let w: Vec<f64> = (0..128).map(|i| (i as f64 * 0.3).cos() * 7.0).collect();
        let cv = enc.encode(&v, scale);
        let cw = enc.encode(&w, scale);
        let sum: Vec<f64> = cv.iter().zip(&cw).map(|(a, b)| (a + b) as f64).collect();
        for (i, x) in enc.decode(&sum, scale).iter().enumerate() {
            assert!((x - v[i] - w[i]).abs() <= 1e-6);
        }
    }
}
