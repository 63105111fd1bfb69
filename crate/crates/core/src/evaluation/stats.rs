use crate::error::{Error, Result};

/// How the goodness-of-fit column is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum R2Mode {
    /// Squared Pearson correlation between predicted and observed.
    #[default]
    PearsonSquared,
    /// `1 − SS_res / SS_tot` against the observed mean.
    CoefficientOfDetermination,
}

impl std::fmt::Display for R2Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            R2Mode::PearsonSquared => "pearson",
            R2Mode::CoefficientOfDetermination => "determination",
        })
    }
}

impl std::str::FromStr for R2Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pearson" => Ok(R2Mode::PearsonSquared),
            "determination" | "cod" => Ok(R2Mode::CoefficientOfDetermination),
            _ => Err(Error::usage(format!(
                "unknown r2 mode '{s}' (pearson, determination)"
            ))),
        }
    }
}

/// Accuracy, bias, and fit of one prediction set against observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub rmse: f64,
    pub mae: f64,
    /// Signed mean error, predicted − observed.
    pub me: f64,
    /// `None` when either vector is constant.
    pub r2: Option<f64>,
    pub n: usize,
}

pub fn compute_stats(predicted: &[f64], observed: &[f64]) -> Result<EvalStats> {
    compute_stats_with(predicted, observed, R2Mode::default())
}

pub fn compute_stats_with(predicted: &[f64], observed: &[f64], mode: R2Mode) -> Result<EvalStats> {
    if predicted.len() != observed.len() {
        return Err(Error::usage(format!(
            "length mismatch: {} predicted vs {} observed",
            predicted.len(),
            observed.len()
        )));
    }
    let n = predicted.len();
    if n < 2 {
        return Err(Error::usage(format!(
            "statistics need at least 2 pairs, got {n}"
        )));
    }
    if predicted.iter().chain(observed).any(|v| !v.is_finite()) {
        return Err(Error::usage("non-finite value in statistics input"));
    }
    let nf = n as f64;
    let (mut se, mut ae, mut e) = (0.0, 0.0, 0.0);
    for (p, o) in predicted.iter().zip(observed) {
        let d = p - o;
        se += d * d;
        ae += d.abs();
        e += d;
    }
    let r2 = match mode {
        R2Mode::PearsonSquared => pearson_squared(predicted, observed),
        R2Mode::CoefficientOfDetermination => {
            let mo = observed.iter().sum::<f64>() / nf;
            let ss_tot: f64 = observed.iter().map(|o| (o - mo).powi(2)).sum();
            (ss_tot > 0.0).then(|| 1.0 - se / ss_tot)
        }
    };
    if r2.is_none() {
        log::warn!("r2 undefined: constant predicted or observed vector (n={n})");
    }
    Ok(EvalStats {
        rmse: (se / nf).sqrt(),
        mae: ae / nf,
        me: e / nf,
        r2,
        n,
    })
}

pub(crate) fn pearson_squared(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov * cov / (va * vb)).min(1.0))
}
