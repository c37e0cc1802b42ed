//! MNIST IDX files, plain or gzipped.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::Array2;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, one image after another.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn count(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols).max(1)
    }
}

fn fmt_err(reason: impl Into<String>) -> Error {
    Error::Format { kind: "IDX", reason: reason.into() }
}

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    if bytes.len() < 4 + 4 * dims {
        return Err(fmt_err(format!("truncated header ({} bytes)", bytes.len())));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(fmt_err(format!("magic {:#010x}, expected {magic:#010x}", word(0))));
    }
    Ok((1..=dims).map(|i| word(i) as usize).collect())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let d = header(bytes, IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (d[0], d[1], d[2]);
    let body = &bytes[16..];
    let need = n.checked_mul(rows).and_then(|v| v.checked_mul(cols)).ok_or_else(|| fmt_err("dimensions overflow"))?;
    if body.len() != need {
        return Err(fmt_err(format!("{n}×{rows}×{cols} header but {} pixel bytes", body.len())));
    }
    Ok(IdxImages { rows, cols, pixels: body.to_vec() })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let n = header(bytes, LABEL_MAGIC, 1)?[0];
    let body = &bytes[8..];
    if body.len() != n {
        return Err(fmt_err(format!("{n} labels in header but {} bytes", body.len())));
    }
    Ok(body.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for w in [IMAGE_MAGIC, images.count() as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&w.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// File contents, transparently gunzipped when the gzip magic is present.
pub fn read_maybe_gz(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&bytes[..]).read_to_end(&mut out).map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Images scaled to `[0, 1]`, one flattened image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistRaw {
    pub rows: usize,
    pub cols: usize,
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl MnistRaw {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn histogram(&self) -> [usize; 10] {
        let mut h = [0; 10];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }

    /// The first `n` examples.
    pub fn head(&self, n: usize) -> MnistRaw {
        let n = n.min(self.len());
        MnistRaw {
            rows: self.rows,
            cols: self.cols,
            images: self.images.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

pub fn load_mnist_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<MnistRaw> {
    let img = parse_images(&read_maybe_gz(images)?)?;
    let lab = parse_labels(&read_maybe_gz(labels)?)?;
    if img.count() != lab.len() {
        return Err(fmt_err(format!("{} images but {} labels", img.count(), lab.len())));
    }
    if let Some(bad) = lab.iter().find(|&&l| l > 9) {
        return Err(fmt_err(format!("label {bad} outside 0..=9")));
    }
    let px = img.rows * img.cols;
    let images = Array2::from_shape_fn((lab.len(), px), |(i, j)| img.pixels[i * px + j] as f64 / 255.0);
    Ok(MnistRaw { rows: img.rows, cols: img.cols, images, labels: lab })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistSplits {
    pub train: MnistRaw,
    pub test: MnistRaw,
}

fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [format!("{stem}.gz"), stem.to_string(), stem.replacen("-idx", ".idx", 1)] {
        let p = dir.join(&name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::io(dir.join(stem), std::io::Error::new(std::io::ErrorKind::NotFound, "MNIST file not found")))
}

/// Loads `train-*` and `t10k-*` from a directory using the standard file names.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<MnistSplits> {
    let dir = dir.as_ref();
    Ok(MnistSplits {
        train: load_mnist_idx(locate(dir, "train-images-idx3-ubyte")?, locate(dir, "train-labels-idx1-ubyte")?)?,
        test: load_mnist_idx(locate(dir, "t10k-images-idx3-ubyte")?, locate(dir, "t10k-labels-idx1-ubyte")?)?,
    })
}

/// The digit subset shipped in the repository's `data/` directory.
pub fn bundled_mnist_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}
