//! Reflectance rasters, pixel masks, and per-pixel LAI map products.

mod format;
mod grid;
mod product;
mod render;

pub use format::{data_path_for, GridFile, RASTER_FORMAT};
pub use grid::{PixelMask, Raster};
pub use product::{
    coefficient_of_variation, gcos_flags, predict_map, GcosFlag, Layer, MapOptions, MapProduct,
    MapSummary, Provenance, DEFAULT_CV_FLOOR, DEFAULT_GCOS_THRESHOLD, LAYER_NAMES, OUTPUT_NODATA,
};
pub use render::{render_heatmap, Palette, Stretch, NODATA_COLOR};
