use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::hyper::{JITTER_MAX, JITTER_START};
use super::kernel::{gram, rows_of, se_from_sq_dist, squared_distance};
use super::{Hyperparams, TrainingData};
use crate::error::{Error, Result};

/// Cholesky factor of `K + (σ_n² + jitter)·I` and the weights it yields.
pub(crate) struct Factorization {
    pub chol: Cholesky<f64, Dyn>,
    pub alpha: DVector<f64>,
    pub jitter: f64,
    pub evidence: f64,
}

/// Adds the noise diagonal to `k_ff` and factorizes, escalating the jitter
/// tenfold per failure until [`JITTER_MAX`]·σ_f².
pub(crate) fn factorize(
    k_ff: &DMatrix<f64>,
    targets: &DVector<f64>,
    hyper: &Hyperparams,
) -> Result<Factorization> {
    let sf2 = hyper.signal_variance();
    let mut jitter = JITTER_START * sf2;
    let ceiling = JITTER_MAX * sf2 * (1.0 + 1e-9);
    while jitter <= ceiling {
        if let Some(f) = factorize_at(k_ff, targets, hyper, jitter) {
            return Ok(f);
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical {
        hyper: hyper.to_string(),
        message: format!(
            "Cholesky of K + noise failed for N={} up to jitter {:e}",
            k_ff.nrows(),
            JITTER_MAX * sf2
        ),
    })
}

pub(crate) fn factorize_at(
    k_ff: &DMatrix<f64>,
    targets: &DVector<f64>,
    hyper: &Hyperparams,
    jitter: f64,
) -> Option<Factorization> {
    let n = k_ff.nrows();
    let mut k = k_ff.clone();
    for i in 0..n {
        k[(i, i)] += hyper.noise_variance() + jitter;
    }
    let chol = Cholesky::new(k)?;
    let alpha = chol.solve(targets);
    let l = chol.l_dirty();
    let half_log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let evidence = -0.5 * targets.dot(&alpha) - half_log_det - 0.5 * n as f64 * (2.0 * PI).ln();
    (evidence.is_finite() && alpha.iter().all(|a| a.is_finite())).then_some(Factorization {
        chol,
        alpha,
        jitter,
        evidence,
    })
}

/// Posterior predictive moments at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Predictive mean with the target centering added back.
    pub mean: f64,
    /// Predictive variance including the observation-noise term.
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A fitted GP ready for prediction. Immutable; share it freely across threads.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    training: TrainingData,
    hyper: Hyperparams,
    chol_factor: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    evidence: f64,
    metadata: BTreeMap<String, String>,
    rows: Vec<Vec<f64>>,
}

impl TrainedModel {
    /// Factorizes the training covariance at fixed hyperparameters.
    pub fn new(
        training: TrainingData,
        hyper: Hyperparams,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let rows = rows_of(&training.inputs);
        let k_ff = gram(&rows, &hyper);
        let f = factorize(&k_ff, &training.targets, &hyper)?;
        Ok(Self::assemble(training, hyper, f, metadata, rows))
    }

    /// Factorizes with exactly `jitter` on the diagonal, no escalation.
    pub(crate) fn with_jitter(
        training: TrainingData,
        hyper: Hyperparams,
        k_ff: DMatrix<f64>,
        jitter: f64,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let rows = rows_of(&training.inputs);
        let f = factorize_at(&k_ff, &training.targets, &hyper, jitter).ok_or_else(|| {
            Error::Numerical {
                hyper: hyper.to_string(),
                message: format!("Cholesky failed at stored jitter {jitter:e}"),
            }
        })?;
        Ok(Self::assemble(training, hyper, f, metadata, rows))
    }

    fn assemble(
        training: TrainingData,
        hyper: Hyperparams,
        f: Factorization,
        metadata: BTreeMap<String, String>,
        rows: Vec<Vec<f64>>,
    ) -> Self {
        TrainedModel {
            chol_factor: f.chol.unpack(),
            alpha: f.alpha,
            jitter: f.jitter,
            evidence: f.evidence,
            training,
            hyper,
            metadata,
            rows,
        }
    }

    /// Adds a provenance entry. Consumes the model, so it can only happen
    /// before the model is shared.
    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn training(&self) -> &TrainingData {
        &self.training
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    /// Lower-triangular Cholesky factor of `K_ff + (σ_n² + jitter)·I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_factor
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log marginal likelihood at the stored hyperparameters.
    pub fn evidence(&self) -> f64 {
        self.evidence
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Number of raw input bands expected by [`TrainedModel::predict`].
    pub fn input_dim(&self) -> usize {
        self.training.dim()
    }

    /// Predictive mean and variance at a raw (unstandardized) band vector.
    pub fn predict(&self, x_star: &[f64]) -> Result<Prediction> {
        let z = self.training.standardize(x_star)?;
        Ok(self.predict_standardized(&z))
    }

    pub(crate) fn predict_standardized(&self, z: &[f64]) -> Prediction {
        let n = self.rows.len();
        let k_star: Vec<f64> = self
            .rows
            .iter()
            .map(|r| se_from_sq_dist(squared_distance(r, z), &self.hyper))
            .collect();
        let mean_centered: f64 = k_star
            .iter()
            .zip(self.alpha.iter())
            .map(|(k, a)| k * a)
            .sum();

        // v = L⁻¹ k*, forward substitution
        let l = &self.chol_factor;
        let mut v = vec![0.0; n];
        for i in 0..n {
            let mut s = k_star[i];
            for (j, vj) in v.iter().enumerate().take(i) {
                s -= l[(i, j)] * vj;
            }
            v[i] = s / l[(i, i)];
        }
        let explained: f64 = v.iter().map(|x| x * x).sum();
        let latent = (self.hyper.signal_variance() - explained).max(0.0);

        Prediction {
            mean: mean_centered + self.training.target_mean,
            variance: self.hyper.noise_variance() + latent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_point_model() -> TrainedModel {
        let data = TrainingData::from_parts(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DVector::from_vec(vec![0.0]),
            0.0,
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        // centered target of 1.0 is impossible for N=1 through from_raw, so
        // build the factorization directly for the closed-form check
        let mut data = data;
        data.targets[0] = 1.0;
        let h = Hyperparams::from_natural(1.0, 1.0, 0.1f64.sqrt()).unwrap();
        TrainedModel::new(data, h, BTreeMap::new()).unwrap()
    }

    #[test]
    fn closed_form_single_point() {
        let m = single_point_model();
        let p = m.predict(&[0.0]).unwrap();
        assert!((p.mean - 1.0 / 1.1).abs() < 1e-8, "{}", p.mean);
        assert!((p.variance - (0.1 + 1.0 - 1.0 / 1.1)).abs() < 1e-8);
        assert!((p.mean - 0.9091).abs() < 1e-4);
        assert!((p.variance - 0.1909).abs() < 1e-4);
    }

    #[test]
    fn far_field_reverts_to_prior() {
        let m = single_point_model();
        let p = m.predict(&[1e6]).unwrap();
        assert_eq!(p.mean, 0.0);
        assert!((p.variance - 1.1).abs() < 1e-12);
    }

    #[test]
    fn jitter_rescues_duplicates() {
        let x = DMatrix::from_row_slice(2, 1, &[0.5, 0.5]);
        let data = TrainingData::from_raw(&x, &[1.0, 1.0]).unwrap();
        let k = gram(
            &rows_of(data.inputs()),
            &Hyperparams::from_natural(1.0, 1.0, 1e-5).unwrap(),
        );
        let h = Hyperparams::from_natural(1.0, 1.0, 1e-5).unwrap();
        let f = factorize(&k, data.targets(), &h).unwrap();
        assert!(f.jitter >= JITTER_START);
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let m = single_point_model();
        assert!(matches!(m.predict(&[0.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn indefinite_matrix_reports_hyperparameters() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 5.0, 1.0]);
        let h = Hyperparams::from_natural(1.0, 1.0, 0.1).unwrap();
        let err = factorize(&k, &DVector::from_vec(vec![0.0, 0.0]), &h)
            .err()
            .unwrap();
        match err {
            Error::Numerical { hyper, .. } => assert!(hyper.contains("ell=")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
