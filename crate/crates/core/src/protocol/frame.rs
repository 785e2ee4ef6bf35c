//! Transport frames: 24-byte header (magic `PPFR`, session u32, round u32,
//! phase u8, type u8, payload length u32, 6 reserved bytes) + payload.

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PPFR";
pub const HEADER_LEN: usize = 24;

macro_rules! byte_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident = $val:expr),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> u8 {
                match self { $($name::$variant => $val),+ }
            }

            pub fn from_code(c: u8) -> Option<Self> {
                match c { $($val => Some($name::$variant),)+ _ => None }
            }

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => stringify!($variant)),+ }
            }
        }
    };
}

byte_enum!(
    /// Protocol phase a frame or a span of work is charged to.
    Phase {
        Handshake = 1,
        KeyExchange = 2,
        Request = 3,
        Preprocess = 4,
        Input = 5,
        Open = 6,
        Truncate = 7,
        ImageUpload = 8,
        Compute = 9,
        Result = 10,
        Close = 11,
    }
);

byte_enum!(
    FrameType {
        Hello = 1,
        HelloAck = 2,
        Reject = 3,
        Keys = 4,
        Request = 5,
        SampleIndex = 6,
        Share = 7,
        Ciphertext = 8,
        Cleartext = 9,
        ResultHeader = 10,
        Close = 11,
        Error = 12,
    }
);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub session: u32,
    pub round: u32,
    pub phase: Phase,
    pub frame_type: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let len =
            u32::try_from(self.payload.len()).map_err(|_| Error::Transport("frame payload exceeds 4 GiB".into()))?;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.session.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.push(self.phase.code());
        out.push(self.frame_type.code());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&[0u8; 6]);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Payload length announced by a header.
    pub fn payload_len(header: &[u8]) -> Result<usize> {
        if header.len() < HEADER_LEN || &header[..4] != MAGIC {
            return Err(Error::parse("frame header", "missing PPFR magic"));
        }
        Ok(u32::from_le_bytes(header[14..18].try_into().unwrap()) as usize)
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame> {
        let len = Self::payload_len(bytes)?;
        if bytes.len() != HEADER_LEN + len {
            return Err(Error::Integrity(format!(
                "frame announces {len} payload bytes, carries {}",
                bytes.len() - HEADER_LEN
            )));
        }
        let phase =
            Phase::from_code(bytes[12]).ok_or_else(|| Error::parse("frame phase", format!("code {}", bytes[12])))?;
        let frame_type =
            FrameType::from_code(bytes[13]).ok_or_else(|| Error::parse("frame type", format!("code {}", bytes[13])))?;
        Ok(Frame {
            session: u32::from_le_bytes(bytes[4..8].try_into().unwrap()),
            round: u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
            phase,
            frame_type,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

/// Length-prefixed little-endian f64 vector.
pub fn encode_f64s(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + values.len() * 8);
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 4 {
        return Err(Error::parse("cleartext payload", "truncated"));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if bytes.len() != 4 + 8 * n {
        return Err(Error::Integrity(format!("{n} values in {} bytes", bytes.len())));
    }
    Ok(bytes[4..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn encode_u32s(values: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + values.len() * 4);
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_u32s(bytes: &[u8]) -> Result<Vec<u32>> {
    if bytes.len() < 4 {
        return Err(Error::parse("index payload", "truncated"));
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if bytes.len() != 4 + 4 * n {
        return Err(Error::Integrity(format!("{n} indices in {} bytes", bytes.len())));
    }
    Ok(bytes[4..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
