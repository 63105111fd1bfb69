//! Test-only oracles that do not share code paths with the library.
#![allow(dead_code)]

use lai_gpr::gp::{Hyperparams, TrainedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Jordan inverse with partial pivoting.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn se(a: &[f64], b: &[f64], ell: f64, sf: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    sf * sf * (-d2 / (2.0 * ell * ell)).exp()
}

/// Posterior mean and variance written straight from the textbook equations:
/// μ = k*ᵀ(K + σ²I)⁻¹y + ȳ and σ*² = σ² + k** − k*ᵀ(K + σ²I)⁻¹k*.
/// The diagonal uses the model's effective noise (σ_n² plus its jitter).
pub fn dense_posterior(model: &TrainedModel, x_raw: &[f64]) -> (f64, f64) {
    let t = model.training();
    let h = model.hyper();
    let (ell, sf, noise) = (h.lengthscale(), h.signal_amp(), h.noise_variance());
    let rows: Vec<Vec<f64>> = (0..t.len())
        .map(|i| t.inputs().row(i).iter().copied().collect())
        .collect();
    let z: Vec<f64> = x_raw
        .iter()
        .zip(t.band_means().iter().zip(t.band_stds()))
        .map(|(x, (m, s))| (x - m) / s)
        .collect();
    let n = rows.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    se(&rows[i], &rows[j], ell, sf)
                        + if i == j { noise + model.jitter() } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let kinv = dense_inverse(&k);
    let kstar: Vec<f64> = rows.iter().map(|r| se(r, &z, ell, sf)).collect();
    let y: Vec<f64> = t.targets().iter().copied().collect();
    let mut mean = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean += kstar[i] * kinv[i][j] * y[j];
            quad += kstar[i] * kinv[i][j] * kstar[j];
        }
    }
    (mean + t.target_mean(), noise + sf * sf - quad)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hyper(rng: &mut ChaCha8Rng) -> Hyperparams {
    Hyperparams::from_natural(
        rng.gen_range(0.4..3.0),
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.05..0.8),
    )
    .unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(n, d, |_, _| rng.gen_range(0.0..1.0))
}

/// Sample Pearson r² and RMSE against observations.
pub fn rmse_r2(pred: &[f64], obs: &[f64]) -> (f64, f64) {
    let n = pred.len() as f64;
    let rmse = (pred
        .iter()
        .zip(obs)
        .map(|(p, o)| (p - o).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let mp = pred.iter().sum::<f64>() / n;
    let mo = obs.iter().sum::<f64>() / n;
    let cov: f64 = pred.iter().zip(obs).map(|(p, o)| (p - mp) * (o - mo)).sum();
    let vp: f64 = pred.iter().map(|p| (p - mp).powi(2)).sum();
    let vo: f64 = obs.iter().map(|o| (o - mo).powi(2)).sum();
    (rmse, cov * cov / (vp * vo))
}

/// Central finite differences of a scalar function of three log-hyperparameters.
pub fn central_difference(f: impl Fn([f64; 3]) -> f64, at: [f64; 3], step: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for k in 0..3 {
        let mut up = at;
        let mut down = at;
        up[k] += step;
        down[k] -= step;
        g[k] = (f(up) - f(down)) / (2.0 * step);
    }
    g
}

/// Ground records with a smooth, saturating reflectance response to LAI.
/// The last `n_bare` records are bare soil without readings.
pub fn synthetic_esu(n: usize, n_bare: usize, seed: u64) -> Vec<lai_gpr::field::EsuRecord> {
    use lai_gpr::field::{EsuRecord, LandCover};
    let mut r = rng(seed);
    let date = chrono::NaiveDate::from_ymd_opt(2016, 7, 12).unwrap();
    (0..n)
        .map(|i| {
            let bare = i >= n - n_bare;
            let lai: f64 = if bare { 0.0 } else { r.gen_range(0.3..5.0) };
            let cover = 1.0 - (-0.5 * lai).exp();
            let mut noise = || r.gen_range(-0.004..0.004);
            let reflectance = [
                0.08 - 0.05 * cover + noise(),
                0.10 - 0.04 * cover + noise(),
                0.14 - 0.11 * cover + noise(),
                0.18 + 0.30 * cover + noise(),
                0.30 - 0.12 * cover + noise(),
                0.25 - 0.15 * cover + noise(),
            ];
            let reading = (!bare).then_some(lai);
            EsuRecord {
                esu_id: format!("ESU{i:03}"),
                date,
                lat: 40.7 + 0.001 * i as f64,
                lon: 0.75 + 0.001 * i as f64,
                land_cover: if bare {
                    LandCover::BareSoil
                } else {
                    LandCover::Rice
                },
                lai_app: reading,
                lai_dhp: reading.map(|v| 0.8 * v),
                lai_lic: reading.map(|v| 0.7 * v),
                reflectance,
            }
        })
        .collect()
}

/// Reflectance raster whose pixels follow the same response as [`synthetic_esu`].
pub fn synthetic_raster(width: usize, height: usize, seed: u64) -> lai_gpr::raster::Raster {
    let mut r = rng(seed);
    let plane = width * height;
    let mut data = vec![0f32; plane * 6];
    for p in 0..plane {
        let (x, y) = ((p % width) as f64, (p / width) as f64);
        let lai = 2.5 + 2.0 * (x / 9.0).sin() * (y / 13.0).cos();
        let cover = 1.0 - (-0.5 * lai).exp();
        let base = [
            0.08 - 0.05 * cover,
            0.10 - 0.04 * cover,
            0.14 - 0.11 * cover,
            0.18 + 0.30 * cover,
            0.30 - 0.12 * cover,
            0.25 - 0.15 * cover,
        ];
        for (b, v) in base.iter().enumerate() {
            data[b * plane + p] = (v + r.gen_range(-0.003..0.003)) as f32;
        }
    }
    lai_gpr::raster::Raster::new(width, height, 6, data, -9999.0, None).unwrap()
}

/// SHA-256 of a file, hex encoded.
pub fn sha256_file(path: &std::path::Path) -> String {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
