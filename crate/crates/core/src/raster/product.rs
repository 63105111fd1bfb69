//! Per-pixel LAI retrieval and the derived uncertainty layers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::format::{data_path_for, GridFile};
use super::{PixelMask, Raster};
use crate::error::{Error, Result};
use crate::gp::TrainedModel;

/// Nodata value written into saved product layers.
pub const OUTPUT_NODATA: f32 = -9999.0;

/// Means below this (LAI units) get no CV.
pub const DEFAULT_CV_FLOOR: f64 = 0.01;

/// Relative-uncertainty threshold, percent.
pub const DEFAULT_GCOS_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    pub cv_floor: f64,
    pub gcos_threshold: f64,
    /// Rows per work block; `None` processes the whole raster as one block.
    pub block_rows: Option<usize>,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            cv_floor: DEFAULT_CV_FLOOR,
            gcos_threshold: DEFAULT_GCOS_THRESHOLD,
            block_rows: None,
        }
    }
}

/// Single-band real grid; `None` marks nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Option<f64>>,
}

impl Layer {
    pub fn nodata(width: usize, height: usize) -> Self {
        Layer {
            width,
            height,
            values: vec![None; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.values[y * self.width + x]
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn to_grid(&self) -> GridFile {
        GridFile {
            width: self.width,
            height: self.height,
            bands: 1,
            nodata: OUTPUT_NODATA,
            geo_tag: None,
            data: self
                .values
                .iter()
                .map(|v| v.map_or(OUTPUT_NODATA, |x| x as f32))
                .collect(),
        }
    }

    pub fn save(&self, header_path: &Path) -> Result<()> {
        self.to_grid()
            .write(header_path, &data_path_for(header_path))
    }

    pub fn load(header_path: &Path) -> Result<Self> {
        let g = GridFile::read(header_path, &data_path_for(header_path))?;
        if g.bands != 1 {
            return Err(Error::load(
                header_path,
                "bands",
                "expected a single-band layer",
            ));
        }
        Ok(Layer {
            width: g.width,
            height: g.height,
            values: g
                .data
                .iter()
                .map(|&v| (!g.is_nodata(v)).then_some(v as f64))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcosFlag {
    Pass,
    Fail,
    NoData,
}

impl GcosFlag {
    fn code(self) -> Option<f64> {
        match self {
            GcosFlag::Pass => Some(1.0),
            GcosFlag::Fail => Some(0.0),
            GcosFlag::NoData => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub model: String,
    pub raster: String,
    /// Producing tool and version.
    pub tool: String,
}

/// Pixel counts over a finished product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MapSummary {
    pub pixels: usize,
    pub valid: usize,
    pub negative_means: usize,
    pub gcos_pass: usize,
    pub gcos_fail: usize,
}

impl MapSummary {
    /// Share of flagged pixels that pass, in percent (0 when none are flagged).
    pub fn gcos_pass_percent(&self) -> f64 {
        let flagged = self.gcos_pass + self.gcos_fail;
        if flagged == 0 {
            0.0
        } else {
            100.0 * self.gcos_pass as f64 / flagged as f64
        }
    }

    pub fn valid_percent(&self) -> f64 {
        if self.pixels == 0 {
            0.0
        } else {
            100.0 * self.valid as f64 / self.pixels as f64
        }
    }
}

/// Co-registered mean, σ, CV, and GCOS flag layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MapProduct {
    pub mean: Layer,
    pub sigma: Layer,
    pub cv: Layer,
    pub gcos: Vec<GcosFlag>,
    pub provenance: Provenance,
}

pub const LAYER_NAMES: [&str; 4] = ["mean", "sigma", "cv", "gcos"];

impl MapProduct {
    pub fn width(&self) -> usize {
        self.mean.width
    }

    pub fn height(&self) -> usize {
        self.mean.height
    }

    pub fn gcos_layer(&self) -> Layer {
        Layer {
            width: self.width(),
            height: self.height(),
            values: self.gcos.iter().map(|f| f.code()).collect(),
        }
    }

    pub fn summary(&self) -> MapSummary {
        MapSummary {
            pixels: self.mean.values.len(),
            valid: self.mean.values.iter().filter(|v| v.is_some()).count(),
            negative_means: self.mean.valid_values().filter(|m| *m < 0.0).count(),
            gcos_pass: self.gcos.iter().filter(|f| **f == GcosFlag::Pass).count(),
            gcos_fail: self.gcos.iter().filter(|f| **f == GcosFlag::Fail).count(),
        }
    }

    /// Writes `mean`, `sigma`, `cv`, `gcos` layers (`.hdr` + `.bin`) and
    /// `provenance.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.mean.save(&dir.join("mean.hdr"))?;
        self.sigma.save(&dir.join("sigma.hdr"))?;
        self.cv.save(&dir.join("cv.hdr"))?;
        self.gcos_layer().save(&dir.join("gcos.hdr"))?;
        let s = self.summary();
        let mut text = String::new();
        writeln!(text, "model = {}", self.provenance.model).unwrap();
        writeln!(text, "raster = {}", self.provenance.raster).unwrap();
        writeln!(text, "tool = {}", self.provenance.tool).unwrap();
        writeln!(text, "pixels = {}", s.pixels).unwrap();
        writeln!(text, "valid = {}", s.valid).unwrap();
        writeln!(text, "negative_means = {}", s.negative_means).unwrap();
        writeln!(text, "gcos_pass = {}", s.gcos_pass).unwrap();
        writeln!(text, "gcos_fail = {}", s.gcos_fail).unwrap();
        let p = dir.join("provenance.txt");
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }
}

/// Applies `model` at every pixel that is unmasked and free of nodata.
/// Work is split into row blocks; the result does not depend on the block size.
pub fn predict_map(
    model: &TrainedModel,
    raster: &Raster,
    mask: &PixelMask,
    options: &MapOptions,
) -> Result<MapProduct> {
    if raster.n_bands() != model.input_dim() {
        return Err(Error::usage(format!(
            "raster has {} bands, model expects {}",
            raster.n_bands(),
            model.input_dim()
        )));
    }
    if (mask.width(), mask.height()) != (raster.width(), raster.height()) {
        return Err(Error::usage(format!(
            "mask is {}x{}, raster is {}x{}",
            mask.width(),
            mask.height(),
            raster.width(),
            raster.height()
        )));
    }
    validate_options(options)?;
    let (w, h) = (raster.width(), raster.height());
    let block = options.block_rows.unwrap_or(h).max(1) * w;

    let mut mean = vec![None; w * h];
    let mut sigma = vec![None; w * h];
    mean.par_chunks_mut(block)
        .zip(sigma.par_chunks_mut(block))
        .enumerate()
        .try_for_each(|(b, (mean_block, sigma_block))| -> Result<()> {
            let start = b * block;
            for (k, (m, s)) in mean_block
                .iter_mut()
                .zip(sigma_block.iter_mut())
                .enumerate()
            {
                let (x, y) = ((start + k) % w, (start + k) / w);
                if !mask.is_valid(x, y) {
                    continue;
                }
                if let Some(px) = raster.pixel(x, y) {
                    let p = model.predict(&px)?;
                    *m = Some(p.mean);
                    *s = Some(p.variance.sqrt());
                }
            }
            Ok(())
        })?;

    let mean = Layer {
        width: w,
        height: h,
        values: mean,
    };
    let sigma = Layer {
        width: w,
        height: h,
        values: sigma,
    };
    let cv = coefficient_of_variation(&mean, &sigma, options.cv_floor)?;
    let mut gcos = gcos_flags(&cv, options.gcos_threshold)?;
    // a valid pixel whose CV is undefined stays unflagged; masked stays nodata
    for (f, m) in gcos.iter_mut().zip(&mean.values) {
        if m.is_none() {
            *f = GcosFlag::NoData;
        }
    }

    let product = MapProduct {
        mean,
        sigma,
        cv,
        gcos,
        provenance: Provenance {
            model: model
                .metadata()
                .get("instrument")
                .cloned()
                .unwrap_or_else(|| "unnamed".into()),
            raster: String::new(),
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        },
    };
    let negatives = product.summary().negative_means;
    if negatives > 0 {
        log::info!("{negatives} pixels with negative mean LAI (kept, excluded from CV)");
    }
    Ok(product)
}

fn validate_options(o: &MapOptions) -> Result<()> {
    if !(o.cv_floor.is_finite() && o.cv_floor > 0.0) {
        return Err(Error::usage(format!(
            "CV floor must be positive, got {}",
            o.cv_floor
        )));
    }
    if !(o.gcos_threshold.is_finite() && o.gcos_threshold > 0.0) {
        return Err(Error::usage(format!(
            "GCOS threshold must be positive, got {}",
            o.gcos_threshold
        )));
    }
    if o.block_rows == Some(0) {
        return Err(Error::usage("block size must be at least one row"));
    }
    Ok(())
}

/// `100 · σ / μ` where `μ ≥ cv_floor`; nodata elsewhere.
pub fn coefficient_of_variation(mean: &Layer, sigma: &Layer, cv_floor: f64) -> Result<Layer> {
    if (mean.width, mean.height) != (sigma.width, sigma.height)
        || mean.values.len() != sigma.values.len()
    {
        return Err(Error::usage("mean and sigma layers differ in size"));
    }
    let values = mean
        .values
        .iter()
        .zip(&sigma.values)
        .map(|(m, s)| match (m, s) {
            (Some(m), Some(s)) if *m >= cv_floor => Some(100.0 * s / m),
            _ => None,
        })
        .collect();
    Ok(Layer {
        width: mean.width,
        height: mean.height,
        values,
    })
}

/// Pass where `cv < threshold`, fail otherwise; nodata propagates.
pub fn gcos_flags(cv: &Layer, threshold: f64) -> Result<Vec<GcosFlag>> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::usage(format!(
            "GCOS threshold must be positive, got {threshold}"
        )));
    }
    Ok(cv
        .values
        .iter()
        .map(|v| match v {
            Some(c) if *c < threshold => GcosFlag::Pass,
            Some(_) => GcosFlag::Fail,
            None => GcosFlag::NoData,
        })
        .collect())
}
