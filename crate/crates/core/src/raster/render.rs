//! Heat-map PNG rendering of a single layer.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use super::Layer;
use crate::error::{Error, Result};

/// Color for nodata pixels (magenta, outside both palettes).
pub const NODATA_COLOR: [u8; 3] = [255, 0, 255];

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Palette {
    #[default]
    Viridis,
    Grayscale,
}

impl Palette {
    /// Color at `t ∈ [0, 1]`.
    pub fn color(self, t: f64) -> [u8; 3] {
        let t = if t.is_finite() {
            t.clamp(0.0, 1.0)
        } else {
            0.0
        };
        match self {
            Palette::Grayscale => {
                let g = (t * 255.0).round() as u8;
                [g, g, g]
            }
            Palette::Viridis => {
                let pos = t * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let f = pos - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                std::array::from_fn(|c| {
                    (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8
                })
            }
        }
    }
}

impl std::fmt::Display for Palette {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Palette::Viridis => "viridis",
            Palette::Grayscale => "grayscale",
        })
    }
}

impl FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "viridis" => Ok(Palette::Viridis),
            "gray" | "grey" | "grayscale" => Ok(Palette::Grayscale),
            _ => Err(Error::usage(format!(
                "unknown palette '{s}' (viridis, grayscale)"
            ))),
        }
    }
}

/// Value range mapped onto the palette.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stretch {
    pub min: f64,
    pub max: f64,
}

impl Stretch {
    /// Min/max of the valid values, or `None` for an all-nodata layer.
    pub fn of(layer: &Layer) -> Option<Self> {
        layer.valid_values().fold(None, |acc, v| match acc {
            None => Some(Stretch { min: v, max: v }),
            Some(s) => Some(Stretch {
                min: s.min.min(v),
                max: s.max.max(v),
            }),
        })
    }

    pub fn position(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }
}

/// Writes an 8-bit RGB PNG plus `<stem>.stretch.txt` holding the value range.
/// Returns the stretch used.
pub fn render_heatmap(layer: &Layer, palette: Palette, out_path: &Path) -> Result<Option<Stretch>> {
    if layer.width == 0 || layer.height == 0 {
        return Err(Error::usage("cannot render an empty layer"));
    }
    let stretch = Stretch::of(layer);
    let mut rgb = Vec::with_capacity(layer.values.len() * 3);
    for v in &layer.values {
        let c = match (v, stretch) {
            (Some(v), Some(s)) => palette.color(s.position(*v)),
            _ => NODATA_COLOR,
        };
        rgb.extend_from_slice(&c);
    }

    let file = File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    let mut enc = png::Encoder::new(
        BufWriter::new(file),
        layer.width as u32,
        layer.height as u32,
    );
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::io(out_path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&rgb).map_err(png_err)?;
    writer.finish().map_err(png_err)?;

    let side = out_path.with_extension("stretch.txt");
    let text = match stretch {
        Some(s) => format!("min = {:?}\nmax = {:?}\n", s.min, s.max),
        None => "min = NA\nmax = NA\n".to_string(),
    };
    fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    Ok(stretch)
}
