//! Product requests sent by party 1 at the start of every joint product.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    /// `lhs · J[samples]`.
    MatVec,
    /// `lhs · B[samples]`.
    MatMulHist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub op: Operation,
    /// Asks party 2 to (re)send its encrypted image material.
    pub need_upload: bool,
    pub level: u32,
    /// Rows of the left operand.
    pub k: u32,
    /// Shared dimension: sample count, or level size when samples stay private.
    pub n: u32,
    /// Columns of the right operand.
    pub m: u32,
}

const LEN: usize = 18;

impl Request {
    pub fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(LEN);
        b.push(match self.op {
            Operation::MatVec => 1,
            Operation::MatMulHist => 2,
        });
        b.push(self.need_upload as u8);
        for v in [self.level, self.k, self.n, self.m] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn decode(b: &[u8]) -> Result<Self> {
        if b.len() != LEN {
            return Err(Error::parse("request", format!("{} bytes, expected {LEN}", b.len())));
        }
        let op = match b[0] {
            1 => Operation::MatVec,
            2 => Operation::MatMulHist,
            c => return Err(Error::parse("request", format!("unknown operation {c}"))),
        };
        let at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        Ok(Self {
            op,
            need_upload: b[1] != 0,
            level: at(2),
            k: at(6),
            n: at(10),
            m: at(14),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Request {
            op: Operation::MatMulHist,
            need_upload: true,
            level: 2,
            k: 7,
            n: 1000,
            m: 32,
        };
        assert_eq!(Request::decode(&r.encode()).unwrap(), r);
        assert!(Request::decode(&[9; LEN]).is_err());
    }
}
