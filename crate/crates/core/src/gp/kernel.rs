//! Isotropic squared-exponential covariance.

use nalgebra::DMatrix;

use super::Hyperparams;
use crate::error::{Error, Result};

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `σ_f² · exp(−‖xi − xj‖² / (2ℓ²))`.
pub fn se_kernel(xi: &[f64], xj: &[f64], hyper: &Hyperparams) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::usage(format!(
            "kernel inputs differ in dimension: {} vs {}",
            xi.len(),
            xj.len()
        )));
    }
    if xi.iter().chain(xj).any(|v| !v.is_finite()) {
        return Err(Error::usage("non-finite kernel input"));
    }
    Ok(se_from_sq_dist(squared_distance(xi, xj), hyper))
}

#[inline]
pub(crate) fn se_from_sq_dist(sq_dist: f64, hyper: &Hyperparams) -> f64 {
    let ell2 = hyper.lengthscale().powi(2);
    hyper.signal_variance() * (-0.5 * sq_dist / ell2).exp()
}

/// Row-major copy of a matrix's rows, used so kernel loops can work on slices.
pub(crate) fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows())
        .map(|i| x.row(i).iter().copied().collect())
        .collect()
}

/// Gram matrix `K_ff` over the rows of `x` (no noise, no jitter).
pub fn kernel_matrix(x: &DMatrix<f64>, hyper: &Hyperparams) -> Result<DMatrix<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("non-finite entry in kernel input matrix"));
    }
    let rows = rows_of(x);
    Ok(gram(&rows, hyper))
}

pub(crate) fn gram(rows: &[Vec<f64>], hyper: &Hyperparams) -> DMatrix<f64> {
    let n = rows.len();
    let sf2 = hyper.signal_variance();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = sf2;
        for j in 0..i {
            let v = se_from_sq_dist(squared_distance(&rows[i], &rows[j]), hyper);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Hyperparams {
        Hyperparams::from_natural(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn zero_distance_gives_signal_variance() {
        let h = unit();
        assert_eq!(se_kernel(&[0.3, -1.0], &[0.3, -1.0], &h).unwrap(), 1.0);
        let h2 = Hyperparams::from_natural(0.7, 2.0, 0.1).unwrap();
        assert!((se_kernel(&[5.0], &[5.0], &h2).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn direct_substitution() {
        let v = se_kernel(&[0.0], &[2.0], &unit()).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            se_kernel(&[0.0, 1.0], &[0.0], &unit()),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            se_kernel(&[f64::NAN], &[0.0], &unit()),
            Err(Error::Usage(_))
        ));
        let x = DMatrix::from_row_slice(2, 1, &[0.0, f64::INFINITY]);
        assert!(kernel_matrix(&x, &unit()).is_err());
    }

    #[test]
    fn single_point_and_duplicates() {
        let h = Hyperparams::from_natural(1.3, 1.7, 0.1).unwrap();
        let k1 = kernel_matrix(&DMatrix::from_row_slice(1, 2, &[0.4, 0.1]), &h).unwrap();
        assert_eq!(k1.shape(), (1, 1));
        assert!((k1[(0, 0)] - 1.7f64.powi(2)).abs() < 1e-14);

        let dup = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.4, 0.1]);
        let k2 = kernel_matrix(&dup, &h).unwrap();
        for v in k2.iter() {
            assert!((v - 1.7f64.powi(2)).abs() < 1e-14);
        }
        // singular without jitter
        assert!(k2.determinant().abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            a in prop::collection::vec(-5.0f64..5.0, 3),
            b in prop::collection::vec(-5.0f64..5.0, 3),
            ell in 0.1f64..5.0,
            sf in 0.1f64..3.0,
        ) {
            let h = Hyperparams::from_natural(ell, sf, 0.1).unwrap();
            let ab = se_kernel(&a, &b, &h).unwrap();
            let ba = se_kernel(&b, &a, &h).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= 0.0 && ab <= sf * sf * (1.0 + 1e-15));
        }
    }
}
