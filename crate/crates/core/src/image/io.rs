//! Binary PGM (P5) for 2D images and raw little-endian f32 volumes with a
//! `key=value` text sidecar for 3D.

use std::fs;
use std::path::{Path, PathBuf};

use super::Image;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    RawVolume,
}

impl ImageFormat {
    /// Picks the format from a file extension (`.pgm` or `.raw`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("raw") => Ok(ImageFormat::RawVolume),
            other => Err(Error::arg(format!(
                "cannot infer image format from extension {other:?}"
            ))),
        }
    }
}

pub fn load_image(path: &Path, format: ImageFormat) -> Result<Image> {
    match format {
        ImageFormat::Pgm => decode_pgm(&fs::read(path)?),
        ImageFormat::RawVolume => {
            let meta = fs::read_to_string(meta_path(path))?;
            let (dims, spacing) = parse_meta(&meta)?;
            decode_raw(&fs::read(path)?, dims, spacing)
        }
    }
}

pub fn save_image(img: &Image, path: &Path, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm => fs::write(path, encode_pgm(img)?)?,
        ImageFormat::RawVolume => {
            let mut bytes = Vec::with_capacity(img.len() * 4);
            for &v in img.data() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
            fs::write(path, bytes)?;
            fs::write(meta_path(path), format_meta(img))?;
        }
    }
    Ok(())
}

fn meta_path(raw: &Path) -> PathBuf {
    raw.with_extension("meta")
}

fn join(vals: impl Iterator<Item = String>) -> String {
    vals.collect::<Vec<_>>().join(",")
}

fn format_meta(img: &Image) -> String {
    format!(
        "dims={}\nspacing={}\n",
        join(img.dims().iter().map(|d| d.to_string())),
        join(img.spacing().iter().map(|s| s.to_string()))
    )
}

fn parse_meta(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut dims = None;
    let mut spacing = None;
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse("meta", format!("expected key=value, got {line:?}")))?;
        match key.trim() {
            "dims" => {
                let v = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::parse("dims", e.to_string()))?;
                dims = Some(v);
            }
            "spacing" => {
                let v = value
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::parse("spacing", e.to_string()))?;
                spacing = Some(v);
            }
            other => return Err(Error::parse(other, "unknown meta key")),
        }
    }
    let dims = dims.ok_or_else(|| Error::parse("dims", "missing"))?;
    let spacing = spacing.unwrap_or_else(|| vec![1.0; dims.len()]);
    if !(2..=3).contains(&dims.len()) {
        return Err(Error::parse(
            "dims",
            format!("expected 2 or 3 values, got {}", dims.len()),
        ));
    }
    Ok((dims, spacing))
}

fn decode_raw(bytes: &[u8], dims: Vec<usize>, spacing: Vec<f64>) -> Result<Image> {
    let n: usize = dims.iter().product();
    if bytes.len() != n * 4 {
        return Err(Error::Integrity(format!(
            "raw volume holds {} bytes, dims {:?} need {}",
            bytes.len(),
            dims,
            n * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Image::new(dims, spacing, data)
}

/// Reads header tokens, skipping whitespace and `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn token(&mut self, field: &str) -> Result<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(field, "unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::parse(field, "non-ASCII token"))
    }

    fn positive(&mut self, field: &str) -> Result<usize> {
        let tok = self.token(field)?;
        let v: i64 = tok
            .parse()
            .map_err(|_| Error::parse(field, format!("not an integer: {tok:?}")))?;
        if v <= 0 {
            return Err(Error::parse(field, format!("must be positive, got {v}")));
        }
        Ok(v as usize)
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let magic = cur.token("magic")?;
    if magic != "P5" {
        return Err(Error::parse("magic", format!("expected P5, got {magic:?}")));
    }
    let width = cur.positive("width")?;
    let height = cur.positive("height")?;
    let maxval = cur.positive("maxval")?;
    if maxval > 65535 {
        return Err(Error::parse("maxval", format!("{maxval} exceeds 65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = cur.pos + 1;
    let depth = if maxval < 256 { 1 } else { 2 };
    let n = width * height;
    let raster = bytes.get(start..).unwrap_or(&[]);
    if raster.len() != n * depth {
        return Err(Error::Integrity(format!(
            "PGM raster holds {} bytes, {width}x{height} at depth {depth} needs {}",
            raster.len(),
            n * depth
        )));
    }
    let data = if depth == 1 {
        raster.iter().map(|&b| b as f64).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    Image::from_vec(vec![width, height], data)
}

fn encode_pgm(img: &Image) -> Result<Vec<u8>> {
    if img.ndim() != 2 {
        return Err(Error::arg("PGM holds 2D images only"));
    }
    let (lo, hi) = img.intensity_range();
    if lo < 0.0 {
        return Err(Error::arg(format!("PGM cannot store negative intensity {lo}")));
    }
    let maxval: u32 = if hi <= 255.0 { 255 } else { 65535 };
    let mut out = format!("P5\n{} {}\n{}\n", img.dims()[0], img.dims()[1], maxval).into_bytes();
    for &v in img.data() {
        let q = v.round().clamp(0.0, maxval as f64) as u32;
        if maxval == 255 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_p5() {
        let mut bytes = b"P5\n# comment\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 64]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.dims(), &[2, 2]);
        assert_eq!(img.data(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn negative_dim_names_field() {
        let bytes = b"P5\n-2 2\n255\n\0\0\0\0".to_vec();
        match decode_pgm(&bytes).unwrap_err() {
            Error::Parse { field, .. } => assert_eq!(field, "width"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn truncated_raster_is_integrity_error() {
        let bytes = b"P5 3 3 255\n\0\0".to_vec();
        assert!(matches!(decode_pgm(&bytes).unwrap_err(), Error::Integrity(_)));
        assert!(matches!(decode_pgm(b"P2 1 1 255\n0").unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn sixteen_bit_round_trip() {
        let img = Image::from_vec(vec![3, 2], vec![0.0, 300.0, 65535.0, 1.0, 2.0, 40000.0]).unwrap();
        let back = decode_pgm(&encode_pgm(&img).unwrap()).unwrap();
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn raw_volume_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.raw");
        let img = Image::from_fn(vec![4, 4, 2], vec![1.0, 1.5, 2.0], |i| {
            (i[0] as f32 * 0.37 - i[1] as f32 * 1.1 + i[2] as f32 / 3.0) as f64
        })
        .unwrap();
        save_image(&img, &path, ImageFormat::RawVolume).unwrap();
        let back = load_image(&path, ImageFormat::RawVolume).unwrap();
        assert_eq!(back.dims(), img.dims());
        assert_eq!(back.spacing(), img.spacing());
        for (a, b) in back.data().iter().zip(img.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn raw_volume_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.raw");
        fs::write(&path, [0u8; 12]).unwrap();
        fs::write(dir.path().join("bad.meta"), "dims=2,2,1\nspacing=1,1,1\n").unwrap();
        assert!(matches!(
            load_image(&path, ImageFormat::RawVolume).unwrap_err(),
            Error::Integrity(_)
        ));
        fs::write(dir.path().join("bad.meta"), "dims=2,x\n").unwrap();
        assert!(matches!(
            load_image(&path, ImageFormat::RawVolume).unwrap_err(),
            Error::Parse { .. }
        ));
    }
}
