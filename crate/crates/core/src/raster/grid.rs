use std::path::Path;

use super::format::GridFile;
use crate::error::{Error, Result};

/// Multiband surface-reflectance image.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub(crate) file: GridFile,
}

impl Raster {
    /// Wraps band-sequential data, checking the reflectance range.
    pub fn new(
        width: usize,
        height: usize,
        n_bands: usize,
        data: Vec<f32>,
        nodata_value: f32,
        geo_tag: Option<[f64; 6]>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || n_bands == 0 {
            return Err(Error::usage("raster dimensions must be positive"));
        }
        if data.len() != width * height * n_bands {
            return Err(Error::usage(format!(
                "raster data has {} values, expected {}",
                data.len(),
                width * height * n_bands
            )));
        }
        let file = GridFile {
            width,
            height,
            bands: n_bands,
            nodata: nodata_value,
            geo_tag,
            data,
        };
        if let Some((idx, v)) = first_out_of_range(&file) {
            let (b, y, x) = unravel(&file, idx);
            return Err(Error::usage(format!(
                "reflectance {v} out of [0, 1] at pixel ({x}, {y}) band {b}"
            )));
        }
        Ok(Raster { file })
    }

    pub fn load(header_path: &Path, data_path: &Path) -> Result<Self> {
        let file = GridFile::read(header_path, data_path)?;
        if let Some((idx, v)) = first_out_of_range(&file) {
            let (b, y, x) = unravel(&file, idx);
            return Err(Error::load(
                data_path,
                format!("byte {}, pixel ({x}, {y}), band {b}", idx * 4),
                format!("reflectance {v} out of [0, 1]"),
            ));
        }
        let raster = Raster { file };
        let nodata = raster.nodata_pixel_count();
        if nodata > 0 {
            log::info!("{}: {nodata} nodata pixels", header_path.display());
        }
        Ok(raster)
    }

    pub fn save(&self, header_path: &Path, data_path: &Path) -> Result<()> {
        self.file.write(header_path, data_path)
    }

    pub fn width(&self) -> usize {
        self.file.width
    }

    pub fn height(&self) -> usize {
        self.file.height
    }

    pub fn n_bands(&self) -> usize {
        self.file.bands
    }

    pub fn nodata_value(&self) -> f32 {
        self.file.nodata
    }

    pub fn geo_tag(&self) -> Option<[f64; 6]> {
        self.file.geo_tag
    }

    pub fn data(&self) -> &[f32] {
        &self.file.data
    }

    /// Band values at `(x, y)`, or `None` if any band holds the nodata value.
    pub fn pixel(&self, x: usize, y: usize) -> Option<Vec<f64>> {
        let plane = self.file.width * self.file.height;
        let base = y * self.file.width + x;
        let mut out = Vec::with_capacity(self.file.bands);
        for b in 0..self.file.bands {
            let v = self.file.data[b * plane + base];
            if self.file.is_nodata(v) {
                return None;
            }
            out.push(v as f64);
        }
        Some(out)
    }

    pub fn nodata_pixel_count(&self) -> usize {
        (0..self.height())
            .flat_map(|y| (0..self.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| self.pixel(x, y).is_none())
            .count()
    }
}

fn first_out_of_range(file: &GridFile) -> Option<(usize, f32)> {
    file.data
        .iter()
        .copied()
        .enumerate()
        .find(|&(_, v)| !file.is_nodata(v) && !(v.is_finite() && (0.0..=1.0).contains(&v)))
}

fn unravel(file: &GridFile, idx: usize) -> (usize, usize, usize) {
    let plane = file.width * file.height;
    let (b, rem) = (idx / plane, idx % plane);
    (b, rem / file.width, rem % file.width)
}

/// Per-pixel validity; invalid pixels are skipped by map inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    valid: Vec<bool>,
}

impl PixelMask {
    pub fn all_valid(width: usize, height: usize) -> Self {
        PixelMask {
            width,
            height,
            valid: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let valid = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        PixelMask {
            width,
            height,
            valid,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Single-band container: nonzero = valid; zero or nodata = masked.
    pub fn load(header_path: &Path, data_path: &Path) -> Result<Self> {
        let file = GridFile::read(header_path, data_path)?;
        if file.bands != 1 {
            return Err(Error::load(
                header_path,
                "bands",
                format!("mask must have 1 band, found {}", file.bands),
            ));
        }
        let valid = file
            .data
            .iter()
            .map(|&v| !file.is_nodata(v) && v != 0.0)
            .collect();
        Ok(PixelMask {
            width: file.width,
            height: file.height,
            valid,
        })
    }

    pub fn save(&self, header_path: &Path, data_path: &Path) -> Result<()> {
        GridFile {
            width: self.width,
            height: self.height,
            bands: 1,
            nodata: -9999.0,
            geo_tag: None,
            data: self
                .valid
                .iter()
                .map(|&v| if v { 1.0 } else { 0.0 })
                .collect(),
        }
        .write(header_path, data_path)
    }
}
