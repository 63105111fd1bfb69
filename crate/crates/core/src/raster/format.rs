//! `gpr-lai-raster/1` container: a plain-text header plus a flat
//! little-endian f32 band-sequential data file.
//!
//! ```text
//! gpr-lai-raster/1
//! width = 1500
//! height = 800
//! bands = 6
//! nodata = -9999
//! geo_tag = 725000 30 0 4350000 0 -30
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const RASTER_FORMAT: &str = "gpr-lai-raster/1";

/// Raw contents of one container, without any value-range interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub nodata: f32,
    /// Six-number affine transform, carried through untouched.
    pub geo_tag: Option<[f64; 6]>,
    /// Band-sequential: `band · width · height + row · width + col`.
    pub data: Vec<f32>,
}

/// Data file path paired with a header path: same stem, `.bin` extension.
pub fn data_path_for(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

impl GridFile {
    pub fn header_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{RASTER_FORMAT}").unwrap();
        writeln!(s, "width = {}", self.width).unwrap();
        writeln!(s, "height = {}", self.height).unwrap();
        writeln!(s, "bands = {}", self.bands).unwrap();
        writeln!(s, "nodata = {:?}", self.nodata).unwrap();
        if let Some(g) = &self.geo_tag {
            let parts: Vec<String> = g.iter().map(|v| format!("{v:?}")).collect();
            writeln!(s, "geo_tag = {}", parts.join(" ")).unwrap();
        }
        s
    }

    pub fn write(&self, header: &Path, data: &Path) -> Result<()> {
        if self.data.len() != self.width * self.height * self.bands {
            return Err(Error::usage(
                "grid data length does not match its dimensions",
            ));
        }
        fs::write(header, self.header_text()).map_err(|e| Error::io(header, e))?;
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(data, bytes).map_err(|e| Error::io(data, e))
    }

    pub fn read(header: &Path, data: &Path) -> Result<Self> {
        let text = fs::read_to_string(header).map_err(|e| Error::io(header, e))?;
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some(RASTER_FORMAT) => {}
            Some(other) => {
                return Err(Error::load(
                    header,
                    "line 1",
                    format!("unknown raster version '{other}'"),
                ))
            }
            None => return Err(Error::load(header, "line 1", "empty header")),
        }
        let (mut width, mut height, mut bands, mut nodata, mut geo_tag) =
            (None, None, None, None, None);
        for (i, line) in lines.enumerate() {
            let loc = format!("line {}", i + 2);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| {
                    Error::load(header, &loc, format!("expected 'key = value': '{line}'"))
                })?;
            let bad = |what: &str| Error::load(header, &loc, format!("invalid {what}: '{v}'"));
            match k {
                "width" => width = Some(v.parse::<usize>().map_err(|_| bad("width"))?),
                "height" => height = Some(v.parse::<usize>().map_err(|_| bad("height"))?),
                "bands" => bands = Some(v.parse::<usize>().map_err(|_| bad("bands"))?),
                "nodata" => nodata = Some(v.parse::<f32>().map_err(|_| bad("nodata"))?),
                "geo_tag" => {
                    let nums: Vec<f64> = v
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("geo_tag"))?;
                    let arr: [f64; 6] = nums.try_into().map_err(|_| bad("geo_tag (6 numbers)"))?;
                    geo_tag = Some(arr);
                }
                other => return Err(Error::load(header, &loc, format!("unknown key '{other}'"))),
            }
        }
        let missing = |k: &str| Error::load(header, "header", format!("missing '{k}'"));
        let width = width.ok_or_else(|| missing("width"))?;
        let height = height.ok_or_else(|| missing("height"))?;
        let bands = bands.ok_or_else(|| missing("bands"))?;
        let nodata = nodata.ok_or_else(|| missing("nodata"))?;
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::load(header, "header", "dimensions must be positive"));
        }

        let bytes = fs::read(data).map_err(|e| Error::io(data, e))?;
        let expected = width * height * bands * 4;
        if bytes.len() != expected {
            return Err(Error::load(
                data,
                format!("byte {}", bytes.len().min(expected)),
                format!(
                    "size mismatch: header declares {width}x{height}x{bands} ({expected} bytes), file has {} bytes",
                    bytes.len()
                ),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(GridFile {
            width,
            height,
            bands,
            nodata,
            geo_tag,
            data,
        })
    }

    pub fn is_nodata(&self, v: f32) -> bool {
        v == self.nodata || (self.nodata.is_nan() && v.is_nan())
    }
}
