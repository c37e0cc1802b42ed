//! 8-bit grayscale PGM images (binary P5 and ASCII P2).

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Min-max normalizes `values` (laid out row-major) to 0..=255.
    /// A constant input renders as uniform 128.
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Degenerate("cannot render non-finite values".into()));
        }
        let pixels = if hi == lo {
            vec![128; values.len()]
        } else {
            let range = hi - lo;
            values.iter().map(|&v| (((v - lo) / range) * 255.0).round().clamp(0.0, 255.0) as u8).collect()
        };
        GrayImage::new(width, height, pixels)
    }

    pub fn to_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn to_p2(&self) -> Vec<u8> {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.into_bytes()
    }

    /// Parses P5 or P2 with any maxval up to 255; other maxvals are rescaled to 255.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| Error::Format { kind: "PGM", reason: reason.to_string() };
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("unexpected end of header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token()?;
        let num = |s: String| s.parse::<usize>().map_err(|_| bad("non-numeric header field"));
        let width = num(token()?)?;
        let height = num(token()?)?;
        let maxval = num(token()?)?;
        if maxval == 0 || maxval > 255 {
            return Err(bad("maxval must be in 1..=255"));
        }
        let rescale = |v: usize| -> u8 { ((v * 255 + maxval / 2) / maxval) as u8 };
        let n = width * height;
        let pixels = match magic.as_str() {
            "P5" => {
                let data = &bytes[(pos + 1).min(bytes.len())..];
                if data.len() != n {
                    return Err(bad(&format!("expected {n} pixel bytes, found {}", data.len())));
                }
                data.iter().map(|&v| rescale(v as usize)).collect()
            }
            "P2" => {
                let mut px = Vec::with_capacity(n);
                for _ in 0..n {
                    let v = num(token()?)?;
                    if v > maxval {
                        return Err(bad("pixel exceeds maxval"));
                    }
                    px.push(rescale(v));
                }
                px
            }
            _ => return Err(bad("unsupported magic (expected P5 or P2)")),
        };
        GrayImage::new(width, height, pixels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        GrayImage::parse(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>, ascii: bool) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = if ascii { self.to_p2() } else { self.to_p5() };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Pixel intensities mapped to [0, 1].
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }
}
