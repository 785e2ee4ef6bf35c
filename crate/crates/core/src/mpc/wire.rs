//! Share wire format: 16-byte header (magic `PPIR`, message type u16,
//! round u16, rank u16, reserved u16, element count u32), `rank` u32 dims,
//! then little-endian u64 elements.

use super::share::RingTensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PPIR";
pub const HEADER_LEN: usize = 16;

pub const MSG_INPUT_SHARE: u16 = 1;
pub const MSG_MASK_E: u16 = 2;
pub const MSG_MASK_F: u16 = 3;
pub const MSG_TRUNC_MASKED: u16 = 4;
pub const MSG_RESULT_SHARE: u16 = 5;

pub fn encoded_len(shape: &[usize]) -> usize {
    HEADER_LEN + 4 * shape.len() + 8 * shape.iter().product::<usize>()
}

pub fn encode(msg_type: u16, round: u16, shape: &[usize], data: &[u64]) -> Result<Vec<u8>> {
    let count: usize = shape.iter().product();
    if count != data.len() {
        return Err(Error::Integrity(format!("shape {shape:?} vs {} elements", data.len())));
    }
    let count32 = u32::try_from(count).map_err(|_| Error::arg("tensor too large for the wire format"))?;
    let mut out = Vec::with_capacity(encoded_len(shape));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&msg_type.to_le_bytes());
    out.extend_from_slice(&round.to_le_bytes());
    out.extend_from_slice(&(shape.len() as u16).to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&count32.to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub msg_type: u16,
    pub round: u16,
    pub tensor: RingTensor,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::parse("share header", "missing PPIR magic"));
    }
    let msg_type = u16_at(bytes, 4);
    let round = u16_at(bytes, 6);
    let rank = u16_at(bytes, 8) as usize;
    let count = u32_at(bytes, 12) as usize;
    let dims_end = HEADER_LEN + 4 * rank;
    if bytes.len() < dims_end {
        return Err(Error::parse("share dims", "truncated"));
    }
    let shape: Vec<usize> = (0..rank).map(|i| u32_at(bytes, HEADER_LEN + 4 * i) as usize).collect();
    if shape.iter().product::<usize>() != count || bytes.len() != dims_end + 8 * count {
        return Err(Error::Integrity(format!(
            "share payload: shape {shape:?}, count {count}, {} bytes",
            bytes.len()
        )));
    }
    let data = bytes[dims_end..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Decoded {
        msg_type,
        round,
        tensor: RingTensor::new(shape, data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_length() {
        let data: Vec<u64> = (0..6).map(|i| u64::MAX - i).collect();
        let bytes = encode(MSG_MASK_E, 7, &[2, 3], &data).unwrap();
        assert_eq!(bytes.len(), encoded_len(&[2, 3]));
        assert_eq!(bytes.len(), 16 + 8 + 48);
        let d = decode(&bytes).unwrap();
        assert_eq!((d.msg_type, d.round), (MSG_MASK_E, 7));
        assert_eq!(d.tensor.shape, vec![2, 3]);
        assert_eq!(d.tensor.data, data);
    }

    #[test]
    fn corrupt_payloads_rejected() {
        let mut bytes = encode(MSG_INPUT_SHARE, 0, &[4], &[1, 2, 3, 4]).unwrap();
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Integrity(_))));
        assert!(decode(b"XXXX000000000000").is_err());
        assert!(encode(1, 0, &[3], &[1]).is_err());
    }
}
