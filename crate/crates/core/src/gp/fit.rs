//! Evidence maximization over the log-hyperparameters with multiple restarts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hyper::NOISE_VARIANCE_FLOOR;
use super::likelihood::{Evaluation, Objective};
use super::{Hyperparams, TrainedModel, TrainingData};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 7;

/// Optimizer settings. Any `fixed_*` value pins that hyperparameter
/// (natural scale) and removes it from the search.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    pub fixed_lengthscale: Option<f64>,
    pub fixed_signal_amp: Option<f64>,
    pub fixed_noise_std: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 5,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            seed: DEFAULT_SEED,
            fixed_lengthscale: None,
            fixed_signal_amp: None,
            fixed_noise_std: None,
        }
    }
}

impl FitConfig {
    fn fixed(&self) -> [Option<f64>; 3] {
        [
            self.fixed_lengthscale.map(f64::ln),
            self.fixed_signal_amp.map(f64::ln),
            self.fixed_noise_std.map(f64::ln),
        ]
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::usage("at least one restart is required"));
        }
        if !(self.gradient_tolerance.is_finite() && self.gradient_tolerance > 0.0) {
            return Err(Error::usage("gradient tolerance must be positive"));
        }
        for (name, v) in [
            ("lengthscale", self.fixed_lengthscale),
            ("signal amplitude", self.fixed_signal_amp),
            ("noise std", self.fixed_noise_std),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::usage(format!(
                        "fixed {name} must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

// Search box in log domain: (log ℓ, log σ_f, log σ_n).
const LOWER: [f64; 3] = [-7.0, -7.0, -11.512925464970229]; // ln √1e-10
const UPPER: [f64; 3] = [7.0, 7.0, 7.0];

/// Outcome of one restart.
#[derive(Debug, Clone)]
pub struct RestartReport {
    pub initial: [f64; 3],
    pub initial_evidence: Option<f64>,
    pub result: std::result::Result<RestartOptimum, String>,
}

#[derive(Debug, Clone)]
pub struct RestartOptimum {
    pub params: [f64; 3],
    pub evidence: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes the evidence from several starting points and returns the
/// model at the best optimum found.
pub fn fit(data: &TrainingData, config: &FitConfig) -> Result<TrainedModel> {
    fit_with_report(data, config).map(|(m, _)| m)
}

pub fn fit_with_report(
    data: &TrainingData,
    config: &FitConfig,
) -> Result<(TrainedModel, Vec<RestartReport>)> {
    config.validate()?;
    if data.distinct_rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "fit needs at least 2 distinct inputs, got {}",
            data.distinct_rows()
        )));
    }
    let fixed = config.fixed();
    let objective = Objective::new(data);

    let mut reports = Vec::with_capacity(config.restarts);
    for init in initial_points(data, config) {
        let init = apply_fixed(clamp(init), &fixed);
        let initial_evidence = Hyperparams::from_array(init)
            .and_then(|h| objective.value(&h))
            .ok();
        let result = match initial_evidence {
            None => Err("initial point is numerically infeasible".to_string()),
            Some(_) => maximize(&objective, init, &fixed, config).map_err(|e| e.to_string()),
        };
        reports.push(RestartReport {
            initial: init,
            initial_evidence,
            result,
        });
    }

    let best = reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.result.as_ref().ok().map(|o| (i, o)))
        .fold(None::<(usize, &RestartOptimum)>, |acc, (i, o)| match acc {
            Some((_, b)) if b.evidence >= o.evidence => acc,
            _ => Some((i, o)),
        });
    let Some((best_idx, best)) = best else {
        return Err(Error::TrainingFailed {
            diagnostics: reports
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    format!(
                        "restart {i} from {:?}: {}",
                        r.initial,
                        r.result.as_ref().err().map(String::as_str).unwrap_or("ok")
                    )
                })
                .collect(),
        });
    };

    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), config.seed.to_string());
    metadata.insert("restarts".to_string(), config.restarts.to_string());
    metadata.insert("best_restart".to_string(), best_idx.to_string());
    metadata.insert("iterations".to_string(), best.iterations.to_string());
    metadata.insert("converged".to_string(), best.converged.to_string());
    let model = TrainedModel::new(
        data.clone(),
        Hyperparams::from_array(best.params)?,
        metadata,
    )?;
    Ok((model, reports))
}

fn initial_points(data: &TrainingData, config: &FitConfig) -> Vec<[f64; 3]> {
    let median = median_pairwise_distance(data);
    let var_y = data.target_variance();
    let var_y = if var_y > 0.0 { var_y } else { 1.0 };
    let log_sf = 0.5 * var_y.ln();
    let log_sn = 0.5 * (0.1 * var_y).max(NOISE_VARIANCE_FLOOR).ln();
    let log_median = median.ln();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let spread = 3f64.ln();
    (0..config.restarts)
        .map(|i| {
            let log_ell = match i {
                0 => log_median,
                1 => log_median + 0.5f64.ln(),
                2 => log_median + 2f64.ln(),
                _ => log_median + rng.gen_range(-spread..spread),
            };
            [log_ell, log_sf, log_sn]
        })
        .collect()
}

fn median_pairwise_distance(data: &TrainingData) -> f64 {
    let x = data.inputs();
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            d.push((x.row(i) - x.row(j)).norm());
        }
    }
    d.sort_by(f64::total_cmp);
    let m = if d.is_empty() {
        0.0
    } else if d.len() % 2 == 1 {
        d[d.len() / 2]
    } else {
        0.5 * (d[d.len() / 2 - 1] + d[d.len() / 2])
    };
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn clamp(mut p: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        p[k] = p[k].clamp(LOWER[k], UPPER[k]);
    }
    p
}

fn apply_fixed(mut p: [f64; 3], fixed: &[Option<f64>; 3]) -> [f64; 3] {
    for k in 0..3 {
        if let Some(v) = fixed[k] {
            p[k] = v;
        }
    }
    p
}

/// Gradient components that can move: not fixed and not pushing against a bound.
fn projected(grad: &[f64; 3], p: &[f64; 3], fixed: &[Option<f64>; 3]) -> [f64; 3] {
    let mut g = *grad;
    for k in 0..3 {
        let blocked = fixed[k].is_some()
            || (p[k] <= LOWER[k] && g[k] < 0.0)
            || (p[k] >= UPPER[k] && g[k] > 0.0);
        if blocked {
            g[k] = 0.0;
        }
    }
    g
}

fn eval_at(objective: &Objective<'_>, p: [f64; 3]) -> Option<Evaluation> {
    let h = Hyperparams::from_array(p).ok()?;
    let e = objective.evaluate(&h).ok()?;
    (e.value.is_finite() && e.gradient.iter().all(|g| g.is_finite())).then_some(e)
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn inf_norm(a: &[f64; 3]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Projected BFGS ascent with backtracking (Armijo) line search.
fn maximize(
    objective: &Objective<'_>,
    start: [f64; 3],
    fixed: &[Option<f64>; 3],
    config: &FitConfig,
) -> Result<RestartOptimum> {
    let mut x = start;
    let mut cur = eval_at(objective, x).ok_or_else(|| Error::Numerical {
        hyper: format!("{x:?}"),
        message: "evidence not computable at start".into(),
    })?;
    let mut h_inv = identity();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        let g = projected(&cur.gradient, &x, fixed);
        if inf_norm(&g) < config.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let step = line_search(objective, &x, &cur, &mv(&h_inv, &g), &g, fixed).or_else(|| {
            h_inv = identity();
            line_search(objective, &x, &cur, &g, &g, fixed)
        });
        let Some((x_new, next)) = step else {
            // no ascent possible at working precision
            break;
        };

        let g_new = projected(&next.gradient, &x_new, fixed);
        let s = [x_new[0] - x[0], x_new[1] - x[1], x_new[2] - x[2]];
        // curvature of −evidence
        let y = [g[0] - g_new[0], g[1] - g_new[1], g[2] - g_new[2]];
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if iterations == 1 {
                let scale = sy / dot(&y, &y);
                h_inv = scaled_identity(scale);
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = x_new;
        cur = next;
    }

    Ok(RestartOptimum {
        params: x,
        evidence: cur.value,
        iterations,
        converged,
    })
}

fn line_search(
    objective: &Objective<'_>,
    x: &[f64; 3],
    cur: &Evaluation,
    direction: &[f64; 3],
    grad: &[f64; 3],
    fixed: &[Option<f64>; 3],
) -> Option<([f64; 3], Evaluation)> {
    let mut dir = *direction;
    for k in 0..3 {
        if fixed[k].is_some() {
            dir[k] = 0.0;
        }
    }
    if dot(&dir, grad) <= 0.0 {
        return None;
    }
    // cap the first trial step at 2 log-units per coordinate
    let longest = inf_norm(&dir);
    let mut t = if longest > 2.0 { 2.0 / longest } else { 1.0 };
    for _ in 0..50 {
        let trial = apply_fixed(
            clamp([x[0] + t * dir[0], x[1] + t * dir[1], x[2] + t * dir[2]]),
            fixed,
        );
        let moved = [trial[0] - x[0], trial[1] - x[1], trial[2] - x[2]];
        if inf_norm(&moved) == 0.0 {
            return None;
        }
        if let Some(e) = eval_at(objective, trial) {
            if e.value > cur.value && e.value >= cur.value + 1e-4 * dot(grad, &moved) {
                return Some((trial, e));
            }
        }
        t *= 0.5;
    }
    None
}

type Mat3 = [[f64; 3]; 3];

fn identity() -> Mat3 {
    scaled_identity(1.0)
}

fn scaled_identity(s: f64) -> Mat3 {
    [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]
}

fn mv(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Inverse-Hessian BFGS update for minimizing −evidence.
fn bfgs_update(h: &mut Mat3, s: &[f64; 3], y: &[f64; 3], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mv(h, y);
    let yhy = dot(y, &hy);
    let mut next = *h;
    for i in 0..3 {
        for j in 0..3 {
            next[i][j] +=
                -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    *h = next;
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn toy() -> TrainingData {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| x.sin() + 0.05 * (7.0 * x).cos())
            .collect();
        TrainingData::from_raw(&DMatrix::from_column_slice(12, 1, &xs), &ys).unwrap()
    }

    #[test]
    fn improves_on_every_start() {
        let (model, reports) = fit_with_report(&toy(), &FitConfig::default()).unwrap();
        assert_eq!(reports.len(), 5);
        for r in &reports {
            if let Some(e0) = r.initial_evidence {
                assert!(model.evidence() >= e0);
            }
            if let Ok(o) = &r.result {
                assert!(o.evidence >= r.initial_evidence.unwrap());
            }
        }
    }

    #[test]
    fn fixed_parameters_stay_put() {
        let cfg = FitConfig {
            fixed_signal_amp: Some(1.0),
            fixed_noise_std: Some(0.2),
            ..FitConfig::default()
        };
        let m = fit(&toy(), &cfg).unwrap();
        assert_eq!(m.hyper().signal_amp(), 1.0);
        assert!((m.hyper().noise_std() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn needs_two_distinct_inputs() {
        let x = DMatrix::from_row_slice(3, 1, &[0.2, 0.2, 0.2]);
        let d = TrainingData::from_raw(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            fit(&d, &FitConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = FitConfig {
            restarts: 0,
            ..FitConfig::default()
        };
        assert!(fit(&toy(), &cfg).is_err());
        let cfg = FitConfig {
            fixed_noise_std: Some(-1.0),
            ..FitConfig::default()
        };
        assert!(fit(&toy(), &cfg).is_err());
    }

    #[test]
    fn bfgs_update_satisfies_secant() {
        let mut h = identity();
        let s = [0.3, -0.1, 0.2];
        let y = [0.5, 0.1, 0.4];
        bfgs_update(&mut h, &s, &y, dot(&s, &y));
        let hy = mv(&h, &y);
        for k in 0..3 {
            assert!((hy[k] - s[k]).abs() < 1e-12);
        }
    }
}
