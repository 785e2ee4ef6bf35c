use std::sync::Arc;

use super::arith::{prime_above, prime_below, Modulus};
use super::encoder::Encoder;
use super::ntt::NttTable;
use crate::error::{Error, Result};
use crate::util::fnv1a64;

/// Ring degree, RNS chain and default scale.
///
/// The chain is `[q0, q1]` plus a special prime `P` for key switching.
/// `q1` is the rescaling prime: multiplying by a plaintext encoded at scale
/// `q1` and rescaling returns a ciphertext to exactly `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeParams {
    pub ring_degree: usize,
    pub data_primes: Vec<u64>,
    pub special_prime: u64,
    pub scale: f64,
}

impl Default for HeParams {
    fn default() -> Self {
        Self::with_degree(4096)
    }
}

impl HeParams {
    pub fn with_degree(n: usize) -> Self {
        let step = 2 * n as u64;
        let q0 = prime_below(50, step, &[]);
        let q1 = prime_above(30, step);
        let p = prime_below(60, step, &[]);
        Self {
            ring_degree: n,
            data_primes: vec![q0, q1],
            special_prime: p,
            scale: (1u64 << 30) as f64,
        }
    }

    pub fn slots(&self) -> usize {
        self.ring_degree / 2
    }

    pub fn max_level(&self) -> usize {
        self.data_primes.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ring_degree;
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::Config(format!("ring degree {n} must be a power of two >= 4")));
        }
        if self.data_primes.is_empty() {
            return Err(Error::Config("empty modulus chain".into()));
        }
        let step = 2 * n as u64;
        for &q in self.data_primes.iter().chain([&self.special_prime]) {
            if q % step != 1 || !super::arith::is_prime(q) {
                return Err(Error::Config(format!(
                    "modulus {q} is not an NTT-friendly prime for N={n}"
                )));
            }
        }
        let smallest = self.data_primes.iter().min().copied().unwrap() as f64;
        if !(self.scale > 1.0 && self.scale < smallest) {
            return Err(Error::Config(format!(
                "scale {} must lie below the smallest modulus",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn hash(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.ring_degree as u64).to_le_bytes());
        for q in self.data_primes.iter().chain([&self.special_prime]) {
            bytes.extend_from_slice(&q.to_le_bytes());
        }
        bytes.extend_from_slice(&self.scale.to_bits().to_le_bytes());
        fnv1a64(&bytes)
    }
}

/// Precomputed tables for one parameter set.
#[derive(Debug)]
pub struct HeContext {
    pub params: HeParams,
    /// Data primes followed by the special prime.
    pub moduli: Vec<Modulus>,
    pub ntt: Vec<NttTable>,
    pub encoder: Encoder,
}

impl HeContext {
    pub fn new(params: HeParams) -> Result<Arc<Self>> {
        params.validate()?;
        let moduli: Vec<Modulus> = params
            .data_primes
            .iter()
            .chain([&params.special_prime])
            .map(|&q| Modulus::new(q))
            .collect();
        let ntt = moduli.iter().map(|&m| NttTable::new(params.ring_degree, m)).collect();
        let encoder = Encoder::new(params.ring_degree);
        Ok(Arc::new(Self {
            params,
            moduli,
            ntt,
            encoder,
        }))
    }

    pub fn n(&self) -> usize {
        self.params.ring_degree
    }

    pub fn slots(&self) -> usize {
        self.params.slots()
    }

    pub fn max_level(&self) -> usize {
        self.params.max_level()
    }

    /// Index of the special prime in `moduli`.
    pub fn special(&self) -> usize {
        self.params.data_primes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_chain() {
        let p = HeParams::default();
        p.validate().unwrap();
        assert_eq!(p.slots(), 2048);
        assert_eq!(p.max_level(), 1);
        assert!(p.data_primes[1] > 1 << 30 && p.data_primes[1] < (1 << 30) + (1 << 20));
        assert_ne!(p.hash(), HeParams::with_degree(2048).hash());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = HeParams::with_degree(64);
        p.scale = 1e30;
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        let mut p = HeParams::with_degree(64);
        p.data_primes[0] += 2;
        assert!(p.validate().is_err());
    }
}
