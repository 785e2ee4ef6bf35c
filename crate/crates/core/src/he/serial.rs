//! Byte layout: magic `PPHE`, kind u8, 3 reserved bytes, params hash u64,
//! level u32, ring degree u32, scale as mantissa u64 and exponent i32,
//! polynomial count u32, aux u64; then per polynomial a limb count u32 and
//! the limbs as little-endian u64 coefficients.

use std::collections::BTreeMap;

use super::cipher::Ciphertext;
use super::keys::{GaloisKey, PublicKey, PublicKeySet};
use super::params::HeContext;
use super::poly::RnsPoly;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PPHE";
pub const HEADER_LEN: usize = 48;

const KIND_CIPHERTEXT: u8 = 1;
const KIND_PUBLIC_KEY: u8 = 2;
const KIND_GALOIS_KEY: u8 = 3;

/// `scale = mantissa · 2^exponent`, exact for finite positive scales.
pub fn split_scale(scale: f64) -> (u64, i32) {
    let bits = scale.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

pub fn join_scale(mantissa: u64, exponent: i32) -> f64 {
    mantissa as f64 * 2f64.powi(exponent)
}

struct Header {
    kind: u8,
    level: u32,
    scale: f64,
    polys: u32,
    aux: u64,
}

fn write(ctx: &HeContext, h: &Header, polys: &[&RnsPoly]) -> Vec<u8> {
    let n = ctx.n();
    let body: usize = polys.iter().map(|p| 4 + p.limbs.len() * n * 8).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + body);
    out.extend_from_slice(MAGIC);
    out.push(h.kind);
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&ctx.params.hash().to_le_bytes());
    out.extend_from_slice(&h.level.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    let (m, e) = split_scale(h.scale);
    out.extend_from_slice(&m.to_le_bytes());
    out.extend_from_slice(&e.to_le_bytes());
    out.extend_from_slice(&h.polys.to_le_bytes());
    out.extend_from_slice(&h.aux.to_le_bytes());
    for p in polys {
        out.extend_from_slice(&(p.limbs.len() as u32).to_le_bytes());
        for limb in &p.limbs {
            for c in limb {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.buf.len() {
            return Err(Error::parse("ciphertext body", "truncated"));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read(ctx: &HeContext, bytes: &[u8], expect_kind: u8) -> Result<(Header, Vec<RnsPoly>)> {
    let mut r = Reader { buf: bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::parse("he header", "missing PPHE magic"));
    }
    let kind = r.take(4)?[0];
    if kind != expect_kind {
        return Err(Error::parse("he kind", format!("expected {expect_kind}, found {kind}")));
    }
    let hash = r.u64()?;
    if hash != ctx.params.hash() {
        return Err(Error::He(format!(
            "parameter hash {hash:#x} does not match local {:#x}",
            ctx.params.hash()
        )));
    }
    let level = r.u32()?;
    let n = r.u32()? as usize;
    if n != ctx.n() {
        return Err(Error::He(format!("ring degree {n} vs local {}", ctx.n())));
    }
    let mantissa = r.u64()?;
    let exponent = r.u32()? as i32;
    let polys = r.u32()?;
    let aux = r.u64()?;
    let mut out = Vec::with_capacity(polys as usize);
    for _ in 0..polys {
        let limbs = r.u32()? as usize;
        if limbs > ctx.moduli.len() {
            return Err(Error::Integrity(format!("{limbs} limbs exceed the modulus chain")));
        }
        let mut p = RnsPoly {
            limbs: Vec::with_capacity(limbs),
        };
        for _ in 0..limbs {
            let raw = r.take(n * 8)?;
            p.limbs.push(
                raw.chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        out.push(p);
    }
    if r.at != bytes.len() {
        return Err(Error::Integrity(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    Ok((
        Header {
            kind,
            level,
            scale: join_scale(mantissa, exponent),
            polys,
            aux,
        },
        out,
    ))
}

pub fn ciphertext_len(ctx: &HeContext, level: usize) -> usize {
    HEADER_LEN + 2 * (4 + (level + 1) * ctx.n() * 8)
}

pub fn write_ciphertext(ctx: &HeContext, ct: &Ciphertext) -> Vec<u8> {
    let h = Header {
        kind: KIND_CIPHERTEXT,
        level: ct.level as u32,
        scale: ct.scale,
        polys: 2,
        aux: 0,
    };
    write(ctx, &h, &[&ct.c0, &ct.c1])
}

pub fn read_ciphertext(ctx: &HeContext, bytes: &[u8]) -> Result<Ciphertext> {
    let (h, mut polys) = read(ctx, bytes, KIND_CIPHERTEXT)?;
    let level = h.level as usize;
    if polys.len() != 2 || polys.iter().any(|p| p.limbs.len() != level + 1) || level > ctx.max_level() {
        return Err(Error::Integrity("ciphertext shape does not match its level".into()));
    }
    let c1 = polys.pop().unwrap();
    let c0 = polys.pop().unwrap();
    Ok(Ciphertext {
        c0,
        c1,
        scale: h.scale,
        level,
    })
}

pub fn write_public_key(ctx: &HeContext, pk: &PublicKey) -> Vec<u8> {
    let h = Header {
        kind: KIND_PUBLIC_KEY,
        level: ctx.max_level() as u32,
        scale: 1.0,
        polys: 2,
        aux: 0,
    };
    write(ctx, &h, &[&pk.b, &pk.a])
}

pub fn read_public_key(ctx: &HeContext, bytes: &[u8]) -> Result<PublicKey> {
    let (_, mut polys) = read(ctx, bytes, KIND_PUBLIC_KEY)?;
    if polys.len() != 2 {
        return Err(Error::Integrity("public key needs two polynomials".into()));
    }
    let a = polys.pop().unwrap();
    let b = polys.pop().unwrap();
    Ok(PublicKey { b, a })
}

pub fn write_galois_key(ctx: &HeContext, key: &GaloisKey) -> Vec<u8> {
    let polys: Vec<&RnsPoly> = key.b.iter().zip(&key.a).flat_map(|(b, a)| [b, a]).collect();
    let h = Header {
        kind: KIND_GALOIS_KEY,
        level: ctx.max_level() as u32,
        scale: 1.0,
        polys: polys.len() as u32,
        aux: key.step as u64,
    };
    write(ctx, &h, &polys)
}

pub fn read_galois_key(ctx: &HeContext, bytes: &[u8]) -> Result<GaloisKey> {
    let (h, polys) = read(ctx, bytes, KIND_GALOIS_KEY)?;
    if polys.len() % 2 != 0 {
        return Err(Error::Integrity("galois key needs (b, a) pairs".into()));
    }
    let step = h.aux as usize;
    let mut b = Vec::new();
    let mut a = Vec::new();
    for pair in polys.chunks_exact(2) {
        b.push(pair[0].clone());
        a.push(pair[1].clone());
    }
    Ok(GaloisKey {
        step,
        galois: ctx.encoder.galois_element(step),
        b,
        a,
    })
}

/// Length-prefixed concatenation of the public key and rotation keys.
pub fn write_key_set(ctx: &HeContext, keys: &PublicKeySet) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let pk = write_public_key(ctx, keys.public()?);
    out.extend_from_slice(&(keys.galois.len() as u32).to_le_bytes());
    out.extend_from_slice(&(pk.len() as u64).to_le_bytes());
    out.extend_from_slice(&pk);
    for key in keys.galois.values() {
        let g = write_galois_key(ctx, key);
        out.extend_from_slice(&(g.len() as u64).to_le_bytes());
        out.extend_from_slice(&g);
    }
    Ok(out)
}

pub fn read_key_set(ctx: &HeContext, bytes: &[u8]) -> Result<PublicKeySet> {
    let mut r = Reader { buf: bytes, at: 0 };
    let count = r.u32()?;
    let len = r.u64()? as usize;
    let public = Some(read_public_key(ctx, r.take(len)?)?);
    let mut galois = BTreeMap::new();
    for _ in 0..count {
        let len = r.u64()? as usize;
        let key = read_galois_key(ctx, r.take(len)?)?;
        galois.insert(key.step, key);
    }
    if r.at != bytes.len() {
        return Err(Error::Integrity("trailing bytes after key set".into()));
    }
    Ok(PublicKeySet { public, galois })
}
