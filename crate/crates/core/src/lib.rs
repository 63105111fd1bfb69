//! Leaf area index retrieval from multiband surface reflectance with exact
//! Gaussian process regression.
//!
//! * [`gp`]: kernel, evidence optimization, predictive mean and variance.
//! * [`field`]: ground sampling-unit records and the repeated split protocol.
//! * [`evaluation`]: validation statistics and run aggregation.
//! * [`raster`]: raster container, per-pixel map products, rendering.
//! * [`cli`]: the `lai-gpr` command-line front end.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod gp;
pub mod raster;

pub use error::{Error, Result};
