//! ETF1 tensor files and binary PPM images.
//!
//! ETF1 layout: the magic `b"ETF1"`, one byte holding the rank, `rank`
//! little-endian `u32` dimensions, then the values as little-endian `f32`
//! in row-major order.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const ETF_MAGIC: &[u8; 4] = b"ETF1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes {0:?}, expected ETF1")]
    Magic([u8; 4]),
    #[error("tensor has {values} values but its shape {shape:?} needs {expected}")]
    Shape {
        shape: Vec<usize>,
        values: usize,
        expected: usize,
    },
    #[error("rank {0} exceeds 255")]
    Rank(usize),
    #[error("trailing bytes after tensor payload")]
    Trailing,
}

/// A dense `f32` tensor as stored in ETF1 files.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, IoError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.len() > 255 {
            if shape.len() > 255 {
                return Err(IoError::Rank(shape.len()));
            }
            return Err(IoError::Shape {
                shape,
                values: data.len(),
                expected,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_f64(shape: Vec<usize>, data: &[f64]) -> Result<Self, IoError> {
        Self::new(shape, data.iter().map(|&v| v as f32).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), IoError> {
        w.write_all(ETF_MAGIC)?;
        w.write_all(&[self.shape.len() as u8])?;
        for &d in &self.shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, IoError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != ETF_MAGIC {
            return Err(IoError::Magic(magic));
        }
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            let mut d = [0u8; 4];
            r.read_exact(&mut d)?;
            shape.push(u32::from_le_bytes(d) as usize);
        }
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(IoError::Trailing);
        }
        Self::new(shape, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// Encodes a binary PPM (P6). `pixels` holds `height × width × channels`
/// values in row-major order; one channel is replicated to grey, values are
/// clamped to `[0, 1]` and scaled to 255.
pub fn encode_ppm(width: usize, height: usize, channels: usize, pixels: &[f64]) -> Vec<u8> {
    assert!(channels == 1 || channels == 3, "PPM needs 1 or 3 channels");
    assert_eq!(pixels.len(), width * height * channels);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    let byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    for px in pixels.chunks(channels) {
        if channels == 1 {
            let b = byte(px[0]);
            out.extend_from_slice(&[b, b, b]);
        } else {
            out.extend(px.iter().map(|&v| byte(v)));
        }
    }
    out
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, channels: usize, pixels: &[f64]) -> Result<(), IoError> {
    std::fs::write(path, encode_ppm(width, height, channels, pixels))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn etf_layout_is_bit_exact() {
        let t = Tensor::new(vec![2, 1], vec![1.0, -0.5]).unwrap();
        let bytes = t.to_bytes();
        let mut expected = b"ETF1".to_vec();
        expected.push(2);
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-0.5f32).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(Tensor::read_from(&bytes[..]).unwrap(), t);
    }

    #[test]
    fn etf_rejects_bad_input() {
        assert!(matches!(Tensor::read_from(&b"ETF2\x00"[..]), Err(IoError::Magic(_))));
        assert!(Tensor::new(vec![3], vec![1.0]).is_err());
        let mut bytes = Tensor::new(vec![1], vec![1.0]).unwrap().to_bytes();
        bytes.push(0);
        assert!(matches!(Tensor::read_from(&bytes[..]), Err(IoError::Trailing)));
        assert!(Tensor::read_from(&bytes[..6]).is_err());
    }

    #[test]
    fn scalar_tensor_has_rank_zero() {
        let t = Tensor::new(vec![], vec![3.0]).unwrap();
        assert_eq!(t.to_bytes().len(), 4 + 1 + 4);
    }

    #[test]
    fn ppm_header_and_clamping() {
        let bytes = encode_ppm(2, 1, 1, &[-1.0, 2.0]);
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 0, 0, 255, 255, 255]);
    }
}
