use std::path::{Path, PathBuf};

use crate::csv::{self, Table};
use crate::error::{Error, Result};
use crate::pgm::GrayImage;

/// Output directory for a study; `None` keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    dir: Option<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Artifacts { dir: Some(dir.into()) }
    }

    pub fn none() -> Self {
        Artifacts { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<()> {
        match &self.dir {
            Some(d) => table.write(d.join(name)),
            None => Ok(()),
        }
    }

    pub fn pgm(&self, name: &str, image: &GrayImage) -> Result<()> {
        match &self.dir {
            Some(d) => image.write(d.join(name), false),
            None => Ok(()),
        }
    }

    /// `key=value` sidecar describing the run.
    pub fn metadata(&self, name: &str, pairs: &[(&str, String)]) -> Result<()> {
        match &self.dir {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                let path = d.join(name);
                std::fs::write(&path, csv::metadata(pairs)).map_err(|e| Error::io(&path, e))
            }
            None => Ok(()),
        }
    }
}

/// Renders a row-major matrix of values already in `[0, 1]` with fixed
/// scaling (0 → black, 1 → white), each cell enlarged to `cell × cell`
/// pixels. NaN cells are drawn mid-gray.
pub fn fixed_scale_image(rows: usize, cols: usize, values: &[f64], cell: usize) -> Result<GrayImage> {
    let (w, h) = (cols * cell, rows * cell);
    let px = (0..w * h)
        .map(|k| {
            let (r, c) = (k / w / cell, k % w / cell);
            let v = values[r * cols + c];
            if v.is_nan() {
                128
            } else {
                (v.clamp(0.0, 1.0) * 255.0).round() as u8
            }
        })
        .collect();
    GrayImage::new(w, h, px)
}
