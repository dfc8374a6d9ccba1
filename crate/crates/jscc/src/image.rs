//! 8-bit grayscale image plane with PGM (P5) reader/writer.

use crate::error::{JsccError, Result};
use std::io::{Read, Write};
use std::path::Path;

/// A grayscale image. Samples are stored as `i32` so the level-shifted and
/// reconstructed domains share one type; valid input range is 0..=255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePlane {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<i32>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, samples: Vec<i32>) -> Self {
        assert_eq!(samples.len(), width * height);
        ImagePlane {
            width,
            height,
            samples,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.samples[row * self.width + col]
    }

    /// Deterministic synthetic test image: smooth gradient, sinusoidal
    /// texture and a few step edges, loosely natural-image-like statistics.
    pub fn synthetic(width: usize, height: usize, seed: u64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        let s = seed as f64;
        for r in 0..height {
            for c in 0..width {
                let x = c as f64 / width as f64;
                let y = r as f64 / height as f64;
                let mut v = 90.0 + 90.0 * x + 40.0 * y;
                v += 25.0 * ((12.0 + s % 5.0) * x * std::f64::consts::TAU).sin()
                    * ((7.0 + s % 3.0) * y * std::f64::consts::TAU).cos();
                if (x - 0.35).hypot(y - 0.4) < 0.18 {
                    v -= 55.0;
                }
                if x > 0.7 && y > 0.6 {
                    v += 35.0;
                }
                // mild deterministic texture
                let h = (r as u64)
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(c as u64)
                    .wrapping_mul(1442695040888963407)
                    .wrapping_add(seed);
                v += ((h >> 33) % 13) as f64 - 6.0;
                samples.push(v.round().clamp(0.0, 255.0) as i32);
            }
        }
        ImagePlane {
            width,
            height,
            samples,
        }
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        Self::parse_pgm(&data)
    }

    pub fn parse_pgm(data: &[u8]) -> Result<Self> {
        fn token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
            loop {
                while *pos < data.len() && data[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < data.len() && data[*pos] == b'#' {
                    while *pos < data.len() && data[*pos] != b'\n' {
                        *pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if start == *pos {
                return Err(JsccError::Malformed("truncated PGM header".into()));
            }
            Ok(&data[start..*pos])
        }
        fn number(data: &[u8], pos: &mut usize) -> Result<usize> {
            String::from_utf8_lossy(token(data, pos)?)
                .parse()
                .map_err(|_| JsccError::Malformed("bad PGM header field".into()))
        }
        let mut pos = 0usize;
        if token(data, &mut pos)? != b"P5" {
            return Err(JsccError::Malformed("not a P5 PGM".into()));
        }
        let width = number(data, &mut pos)?;
        let height = number(data, &mut pos)?;
        let maxval = number(data, &mut pos)?;
        if maxval != 255 {
            return Err(JsccError::Malformed("only 8-bit PGM supported".into()));
        }
        pos += 1; // single whitespace after maxval
        if data.len() < pos + width * height {
            return Err(JsccError::Malformed("truncated PGM payload".into()));
        }
        let samples = data[pos..pos + width * height]
            .iter()
            .map(|&b| b as i32)
            .collect();
        Ok(ImagePlane {
            width,
            height,
            samples,
        })
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .samples
            .iter()
            .map(|&s| s.clamp(0, 255) as u8)
            .collect();
        f.write_all(&bytes)?;
        Ok(())
    }
}

/// PSNR in dB against a peak amplitude of 255, from per-sample differences.
pub fn psnr(reference: &ImagePlane, test: &ImagePlane) -> f64 {
    assert_eq!(reference.samples.len(), test.samples.len());
    let mse: f64 = reference
        .samples
        .iter()
        .zip(test.samples.iter())
        .map(|(&a, &b)| {
            let d = (a - b) as f64;
            d * d
        })
        .sum::<f64>()
        / reference.samples.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_roundtrip() {
        let img = ImagePlane::synthetic(32, 16, 1);
        let dir = std::env::temp_dir().join("jscc_pgm_test.pgm");
        img.write_pgm(&dir).unwrap();
        let back = ImagePlane::read_pgm(&dir).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pgm_rejects_garbage() {
        assert!(ImagePlane::parse_pgm(b"P6\n2 2\n255\nxxxx").is_err());
        assert!(ImagePlane::parse_pgm(b"P5\n2 2\n255\nxx").is_err());
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let img = ImagePlane::synthetic(16, 16, 2);
        assert!(psnr(&img, &img).is_infinite());
    }
}
