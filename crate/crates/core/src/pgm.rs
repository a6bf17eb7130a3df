//! Binary PGM (P5, maxval 255) grayscale images.
//!
//! Written as `P5\n<width> <height>\n255\n` followed by `width * height`
//! raw bytes, row-major. The reader also accepts comments and arbitrary
//! whitespace in the header.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::dim(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Quantizes values in `[0, 1]` (clamped) to 8 bits with rounding.
    pub fn from_unit_values(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Pixel values mapped to `[0, 1]`.
    pub fn unit_values(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let err = |offset: usize, message: &str| Error::Parse {
            offset,
            message: message.to_string(),
        };
        if !bytes.starts_with(b"P5") {
            return Err(err(0, "missing P5 magic"));
        }
        let mut pos = 2;
        let mut fields = [0usize; 3];
        for field in fields.iter_mut() {
            loop {
                match bytes.get(pos) {
                    Some(b'#') => {
                        while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    _ => break,
                }
            }
            let start = pos;
            while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            if start == pos {
                return Err(err(pos, "expected a decimal header field"));
            }
            *field = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(start, "header field out of range"))?;
        }
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(err(pos, "expected whitespace after maxval"));
        }
        pos += 1;
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(err(pos, "only maxval 255 is supported"));
        }
        let n = width * height;
        let data = &bytes[pos..];
        if data.len() < n {
            return Err(err(bytes.len(), "pixel data truncated"));
        }
        Self::new(width, height, data[..n].to_vec())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::wscore::io::write_atomic(path.as_ref(), &self.encode())
    }
}
