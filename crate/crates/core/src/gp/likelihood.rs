//! Log marginal likelihood (evidence) and its gradient in log-hyperparameter space.

use nalgebra::{DMatrix, DVector};

use super::kernel::{rows_of, se_from_sq_dist, squared_distance};
use super::model::factorize;
use super::{Hyperparams, TrainingData};
use crate::error::Result;

/// Evidence value, gradient with respect to
/// `(log ℓ, log σ_f, log σ_n)`, and the jitter used.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: [f64; 3],
}

/// Caches the pairwise squared distances of one training set so repeated
/// evaluations during optimization only redo the hyperparameter-dependent work.
pub(crate) struct Objective<'a> {
    targets: &'a DVector<f64>,
    sq_dists: DMatrix<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(data: &'a TrainingData) -> Self {
        let rows = rows_of(data.inputs());
        let n = rows.len();
        let mut sq_dists = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let d = squared_distance(&rows[i], &rows[j]);
                sq_dists[(i, j)] = d;
                sq_dists[(j, i)] = d;
            }
        }
        Objective {
            targets: data.targets(),
            sq_dists,
        }
    }

    fn gram(&self, hyper: &Hyperparams) -> DMatrix<f64> {
        let n = self.sq_dists.nrows();
        let sf2 = hyper.signal_variance();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                sf2
            } else {
                se_from_sq_dist(self.sq_dists[(i, j)], hyper)
            }
        })
    }

    pub fn value(&self, hyper: &Hyperparams) -> Result<f64> {
        Ok(factorize(&self.gram(hyper), self.targets, hyper)?.evidence)
    }

    pub fn evaluate(&self, hyper: &Hyperparams) -> Result<Evaluation> {
        let k_ff = self.gram(hyper);
        let f = factorize(&k_ff, self.targets, hyper)?;
        let k_inv = f.chol.inverse();
        let n = k_ff.nrows();
        let inv_ell2 = 1.0 / hyper.lengthscale().powi(2);
        let noise = hyper.noise_variance();

        // ½ tr((ααᵀ − K⁻¹) ∂K/∂θ) for each log-hyperparameter
        let (mut g_ell, mut g_sf, mut g_sn) = (0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = f.alpha[i] * f.alpha[j] - k_inv[(i, j)];
                let k = k_ff[(i, j)];
                g_ell += w * k * self.sq_dists[(i, j)] * inv_ell2;
                // the jitter scales with σ_f², so it belongs to this derivative
                let dk_sf = if i == j {
                    2.0 * (k + f.jitter)
                } else {
                    2.0 * k
                };
                g_sf += w * dk_sf;
                if i == j {
                    g_sn += w * 2.0 * noise;
                }
            }
        }
        Ok(Evaluation {
            value: f.evidence,
            gradient: [0.5 * g_ell, 0.5 * g_sf, 0.5 * g_sn],
        })
    }
}

/// Log marginal likelihood of the centered targets and its analytic gradient
/// with respect to `(log ℓ, log σ_f, log σ_n)`.
pub fn log_marginal_likelihood(
    data: &TrainingData,
    hyper: &Hyperparams,
) -> Result<(f64, [f64; 3])> {
    let e = Objective::new(data).evaluate(hyper)?;
    Ok((e.value, e.gradient))
}
