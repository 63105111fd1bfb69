//! Exact Gaussian process regression with an isotropic squared-exponential
//! kernel: evidence optimization and closed-form predictive moments.

mod data;
mod fit;
mod hyper;
mod io;
mod kernel;
mod likelihood;
mod model;
mod sample;

pub use data::TrainingData;
pub use fit::{fit, fit_with_report, FitConfig, RestartOptimum, RestartReport, DEFAULT_SEED};
pub use hyper::{Hyperparams, JITTER_MAX, JITTER_START, NOISE_VARIANCE_FLOOR};
pub use io::MODEL_FORMAT;
pub use kernel::{kernel_matrix, se_kernel};
pub use likelihood::log_marginal_likelihood;
pub use model::{Prediction, TrainedModel};
pub use sample::gp_sample;
