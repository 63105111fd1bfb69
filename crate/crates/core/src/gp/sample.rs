use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::hyper::{JITTER_MAX, JITTER_START};
use super::kernel::kernel_matrix;
use super::Hyperparams;
use crate::error::{Error, Result};

/// Draws noisy observations `L·z + σ_n·z′` of a zero-mean GP at the rows of
/// `x`, where `L` is the Cholesky factor of `K_ff` (plus jitter).
/// Deterministic for a fixed seed.
pub fn gp_sample(x: &DMatrix<f64>, hyper: &Hyperparams, seed: u64) -> Result<DVector<f64>> {
    let k = kernel_matrix(x, hyper)?;
    let n = k.nrows();
    let sf2 = hyper.signal_variance();
    let mut jitter = JITTER_START * sf2;
    let l = loop {
        if jitter > JITTER_MAX * sf2 * (1.0 + 1e-9) {
            return Err(Error::Numerical {
                hyper: hyper.to_string(),
                message: "prior covariance not factorizable".into(),
            });
        }
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            break c.unpack();
        }
        jitter *= 10.0;
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    let z_noise: DVector<f64> =
        DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    Ok(l * z + z_noise * hyper.noise_std())
}
