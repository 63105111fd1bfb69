use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Standardized, centered training set together with the statistics needed to
/// map raw band values into the same space at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub(crate) inputs: DMatrix<f64>,
    pub(crate) targets: DVector<f64>,
    pub(crate) target_mean: f64,
    pub(crate) band_means: Vec<f64>,
    pub(crate) band_stds: Vec<f64>,
}

impl TrainingData {
    /// Z-scores each column of `raw_inputs` and subtracts the sample mean from
    /// `targets`. Bands with zero spread keep unit scale.
    pub fn from_raw(raw_inputs: &DMatrix<f64>, targets: &[f64]) -> Result<Self> {
        let (n, d) = raw_inputs.shape();
        if n == 0 || d == 0 {
            return Err(Error::InsufficientData(format!(
                "training inputs must be non-empty, got {n}x{d}"
            )));
        }
        if targets.len() != n {
            return Err(Error::usage(format!(
                "{} targets for {n} input rows",
                targets.len()
            )));
        }
        if raw_inputs.iter().chain(targets).any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite value in training data"));
        }

        let mut band_means = Vec::with_capacity(d);
        let mut band_stds = Vec::with_capacity(d);
        for c in 0..d {
            let col = raw_inputs.column(c);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            band_means.push(mean);
            band_stds.push(if std > 0.0 { std } else { 1.0 });
        }
        let inputs = DMatrix::from_fn(n, d, |i, j| {
            (raw_inputs[(i, j)] - band_means[j]) / band_stds[j]
        });

        let target_mean = targets.iter().sum::<f64>() / n as f64;
        let targets = DVector::from_iterator(n, targets.iter().map(|y| y - target_mean));

        Ok(TrainingData {
            inputs,
            targets,
            target_mean,
            band_means,
            band_stds,
        })
    }

    /// Reassembles a training set from stored parts, checking the invariants.
    pub fn from_parts(
        inputs: DMatrix<f64>,
        targets: DVector<f64>,
        target_mean: f64,
        band_means: Vec<f64>,
        band_stds: Vec<f64>,
    ) -> Result<Self> {
        let (n, d) = inputs.shape();
        if n == 0 || d == 0 {
            return Err(Error::InsufficientData("empty training inputs".into()));
        }
        if targets.len() != n || band_means.len() != d || band_stds.len() != d {
            return Err(Error::usage("training data parts have inconsistent sizes"));
        }
        if inputs
            .iter()
            .chain(targets.iter())
            .chain(&band_means)
            .chain(&band_stds)
            .chain(std::iter::once(&target_mean))
            .any(|v| !v.is_finite())
        {
            return Err(Error::usage("non-finite value in training data"));
        }
        if band_stds.iter().any(|s| *s <= 0.0) {
            return Err(Error::usage("band standard deviations must be positive"));
        }
        let scale = targets.iter().map(|t| t.abs()).fold(1.0, f64::max);
        if (targets.sum() / n as f64).abs() > 1e-10 * scale {
            return Err(Error::usage("training targets are not centered"));
        }
        Ok(TrainingData {
            inputs,
            targets,
            target_mean,
            band_means,
            band_stds,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Standardized inputs, one row per sample.
    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    /// Centered targets.
    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn band_means(&self) -> &[f64] {
        &self.band_means
    }

    pub fn band_stds(&self) -> &[f64] {
        &self.band_stds
    }

    /// Maps a raw band vector into the standardized input space.
    pub fn standardize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dim() {
            return Err(Error::usage(format!(
                "expected {} bands, got {}",
                self.dim(),
                raw.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite prediction input"));
        }
        Ok(raw
            .iter()
            .zip(self.band_means.iter().zip(&self.band_stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    /// Sample variance of the centered targets (population form).
    pub(crate) fn target_variance(&self) -> f64 {
        self.targets.iter().map(|t| t * t).sum::<f64>() / self.len() as f64
    }

    pub(crate) fn distinct_rows(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = (0..self.len())
            .map(|i| self.inputs.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows.len()
    }
}
