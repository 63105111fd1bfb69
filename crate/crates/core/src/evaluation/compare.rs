use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::stats::pearson_squared;
use crate::error::{Error, Result};

/// Mean of `a − b` over co-registered predictions.
pub fn cross_model_bias(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "bias inputs differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::usage("bias of empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64)
}

/// Summary of a scatter relative to the 1:1 line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterSummary {
    pub n: usize,
    pub bias: f64,
    pub r2: Option<f64>,
}

pub fn scatter_summary(a: &[f64], b: &[f64]) -> Result<ScatterSummary> {
    let bias = cross_model_bias(a, b)?;
    Ok(ScatterSummary {
        n: a.len(),
        bias,
        r2: if a.len() >= 2 {
            pearson_squared(a, b)
        } else {
            None
        },
    })
}

/// Writes `# n=`, `# bias=`, `# r2=` comment lines, a header with the two
/// labels, then one row per pair. Values keep full round-trip precision.
pub fn scatter_export(
    a: &[f64],
    b: &[f64],
    labels: (&str, &str),
    path: &Path,
) -> Result<ScatterSummary> {
    let summary = scatter_summary(a, b)?;
    let mut out = String::new();
    writeln!(out, "# n={}", summary.n).unwrap();
    writeln!(out, "# bias={:?}", summary.bias).unwrap();
    match summary.r2 {
        Some(r2) => writeln!(out, "# r2={r2:?}").unwrap(),
        None => writeln!(out, "# r2=NA").unwrap(),
    }
    writeln!(out, "{},{}", labels.0, labels.1).unwrap();
    for (x, y) in a.iter().zip(b) {
        writeln!(out, "{x:?},{y:?}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    Ok(summary)
}

/// Reads the pairs back from a file written by [`scatter_export`].
pub fn load_scatter(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(x, y)| Some((x.parse::<f64>().ok()?, y.parse::<f64>().ok()?)));
        let Some((x, y)) = parsed else {
            return Err(Error::load(
                path,
                format!("line {}", i + 1),
                "expected two numbers",
            ));
        };
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}
