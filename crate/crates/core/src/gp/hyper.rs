use std::fmt;

use crate::error::{Error, Result};

/// Smallest admissible observation-noise variance (output units squared).
pub const NOISE_VARIANCE_FLOOR: f64 = 1e-10;

/// Initial diagonal jitter, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;

/// Largest diagonal jitter tried before giving up, relative to the signal variance.
pub const JITTER_MAX: f64 = 1e-4;

/// Hyperparameters of the isotropic squared-exponential GP, stored in log domain.
///
/// `log_lengthscale` is in (standardized) input units, the two amplitudes in
/// output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub(crate) log_lengthscale: f64,
    pub(crate) log_signal_amp: f64,
    pub(crate) log_noise_std: f64,
}

impl Hyperparams {
    pub fn new(log_lengthscale: f64, log_signal_amp: f64, log_noise_std: f64) -> Result<Self> {
        let h = Hyperparams {
            log_lengthscale,
            log_signal_amp,
            log_noise_std,
        };
        h.validate()?;
        Ok(h)
    }

    /// Builds from natural-scale values (ℓ, σ_f, σ_n).
    pub fn from_natural(lengthscale: f64, signal_amp: f64, noise_std: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && signal_amp > 0.0 && noise_std > 0.0) {
            return Err(Error::usage(format!(
                "hyperparameters must be strictly positive, got ell={lengthscale}, sf={signal_amp}, sn={noise_std}"
            )));
        }
        Self::new(lengthscale.ln(), signal_amp.ln(), noise_std.ln())
    }

    pub(crate) fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    fn validate(&self) -> Result<()> {
        let all = self.to_array();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage(format!("non-finite hyperparameter in {self}")));
        }
        let natural = [self.lengthscale(), self.signal_amp(), self.noise_std()];
        if natural.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::usage(format!(
                "hyperparameters out of range: {self}"
            )));
        }
        // small relative slack so that ln/exp round trips of the floor itself pass
        if self.noise_variance() < NOISE_VARIANCE_FLOOR * (1.0 - 1e-9) {
            return Err(Error::usage(format!(
                "noise variance {:e} below floor {:e}",
                self.noise_variance(),
                NOISE_VARIANCE_FLOOR
            )));
        }
        Ok(())
    }

    pub fn log_lengthscale(&self) -> f64 {
        self.log_lengthscale
    }

    pub fn log_signal_amp(&self) -> f64 {
        self.log_signal_amp
    }

    pub fn log_noise_std(&self) -> f64 {
        self.log_noise_std
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    pub fn signal_amp(&self) -> f64 {
        self.log_signal_amp.exp()
    }

    pub fn signal_variance(&self) -> f64 {
        (2.0 * self.log_signal_amp).exp()
    }

    pub fn noise_std(&self) -> f64 {
        self.log_noise_std.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        (2.0 * self.log_noise_std).exp()
    }

    pub fn to_array(&self) -> [f64; 3] {
        [
            self.log_lengthscale,
            self.log_signal_amp,
            self.log_noise_std,
        ]
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(ell={:.6e}, sf={:.6e}, sn={:.6e})",
            self.lengthscale(),
            self.signal_amp(),
            self.noise_std()
        )
    }
}
