use crate::error::{Error, Result};

pub const DEFAULT_FRAC_BITS: u32 = 16;

/// Bit width `ℓ` bounding the magnitude of products before truncation.
pub const TRUNCATION_BITS: u32 = 48;

/// Signed fixed-point values embedded in `Z_{2^64}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCodec {
    pub frac_bits: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self::new(DEFAULT_FRAC_BITS)
    }
}

impl FixedPointCodec {
    pub fn new(frac_bits: u32) -> Self {
        assert!(
            2 * frac_bits < TRUNCATION_BITS - 1,
            "fractional bits leave no integer range"
        );
        Self { frac_bits }
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Largest magnitude an encoded value, or a product of two, may take.
    pub fn limit(&self) -> f64 {
        (1u64 << (TRUNCATION_BITS - 1 - 2 * self.frac_bits)) as f64
    }

    pub fn encode(&self, x: f64) -> Result<u64> {
        if !x.is_finite() || x.abs() >= self.limit() {
            return Err(Error::EncodingOverflow {
                value: x,
                limit: self.limit(),
            });
        }
        Ok((x * self.scale()).round() as i64 as u64)
    }

    pub fn encode_all(&self, xs: &[f64]) -> Result<Vec<u64>> {
        xs.iter().map(|&x| self.encode(x)).collect()
    }

    pub fn decode(&self, r: u64) -> f64 {
        r as i64 as f64 / self.scale()
    }

    pub fn decode_all(&self, rs: &[u64]) -> Vec<f64> {
        rs.iter().map(|&r| self.decode(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn documented_encodings() {
        let c = FixedPointCodec::default();
        assert_eq!(c.encode(1.5).unwrap(), 98304);
        assert_eq!(c.encode(-1.0).unwrap(), 0u64.wrapping_sub(65536));
        assert_eq!(c.encode(0.0).unwrap(), 0);
        assert_eq!(c.decode(c.encode(-1.0).unwrap()), -1.0);
    }

    #[test]
    fn overflow_is_reported() {
        let c = FixedPointCodec::default();
        assert_eq!(c.limit(), 32768.0);
        assert!(matches!(c.encode(32768.0), Err(Error::EncodingOverflow { .. })));
        assert!(matches!(c.encode(f64::NAN), Err(Error::EncodingOverflow { .. })));
        assert!(c.encode(-32767.9).is_ok());
    }

    #[test]
    fn round_trip_within_half_ulp() {
        let c = FixedPointCodec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-c.limit() + 1.0..c.limit() - 1.0);
            let err = (x - c.decode(c.encode(x).unwrap())).abs();
            assert!(err <= 0.5 / c.scale() + 1e-12, "{x} {err}");
        }
    }
}
