//! Text serialization of trained models (`gpr-lai-model/1`).
//!
//! ```text
//! gpr-lai-model/1
//! n = 3
//! d = 2
//! log_lengthscale = 0.1
//! ...
//! band_means = 0.1 0.2
//! input = 0.5 -1.2
//! input = ...
//! meta.instrument = app
//! ```
//!
//! Floats are written in shortest round-trip form, so a reload is exact. The
//! Cholesky factor is not stored; it is recomputed from the inputs with the
//! stored jitter, which reproduces it bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::kernel::{gram, rows_of};
use super::{Hyperparams, TrainedModel, TrainingData};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "gpr-lai-model/1";

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

impl TrainedModel {
    pub fn to_text(&self) -> String {
        let t = self.training();
        let h = self.hyper();
        let mut out = String::new();
        writeln!(out, "{MODEL_FORMAT}").unwrap();
        writeln!(out, "n = {}", t.len()).unwrap();
        writeln!(out, "d = {}", t.dim()).unwrap();
        writeln!(out, "log_lengthscale = {:?}", h.log_lengthscale()).unwrap();
        writeln!(out, "log_signal_amp = {:?}", h.log_signal_amp()).unwrap();
        writeln!(out, "log_noise_std = {:?}", h.log_noise_std()).unwrap();
        writeln!(out, "jitter = {:?}", self.jitter()).unwrap();
        writeln!(out, "evidence = {:?}", self.evidence()).unwrap();
        writeln!(out, "target_mean = {:?}", t.target_mean()).unwrap();
        writeln!(out, "band_means = {}", join(t.band_means().iter().copied())).unwrap();
        writeln!(out, "band_stds = {}", join(t.band_stds().iter().copied())).unwrap();
        writeln!(out, "targets = {}", join(t.targets().iter().copied())).unwrap();
        writeln!(out, "alpha = {}", join(self.alpha().iter().copied())).unwrap();
        for i in 0..t.len() {
            writeln!(out, "input = {}", join(t.inputs().row(i).iter().copied())).unwrap();
        }
        for (k, v) in self.metadata() {
            writeln!(out, "meta.{k} = {}", v.replace('\n', " ")).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Load {
                location, message, ..
            } => Error::load(path, location, message),
            other => other,
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::load("<model>", format!("line {line}"), msg);
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == MODEL_FORMAT => {}
            Some((_, first)) => {
                return Err(err(
                    1,
                    format!("unsupported model format '{}'", first.trim()),
                ))
            }
            None => return Err(err(1, "empty model file".into())),
        }

        let mut scalars: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut inputs: Vec<Vec<f64>> = Vec::new();
        let mut metadata = BTreeMap::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(lineno, format!("expected 'key = value', got '{line}'")))?;
            if let Some(meta_key) = key.strip_prefix("meta.") {
                metadata.insert(meta_key.to_string(), value.to_string());
            } else if key == "input" {
                inputs.push(parse_floats(value).map_err(|m| err(lineno, m))?);
            } else if scalars.insert(key, (lineno, value)).is_some() {
                return Err(err(lineno, format!("duplicate key '{key}'")));
            }
        }

        let get = |key: &str| -> Result<(usize, &str)> {
            scalars
                .get(key)
                .copied()
                .ok_or_else(|| Error::load("<model>", "header", format!("missing key '{key}'")))
        };
        let float = |key: &str| -> Result<f64> {
            let (l, v) = get(key)?;
            v.parse::<f64>()
                .map_err(|_| err(l, format!("'{key}' is not a number: '{v}'")))
        };
        let floats = |key: &str| -> Result<Vec<f64>> {
            let (l, v) = get(key)?;
            parse_floats(v).map_err(|m| err(l, m))
        };
        let count = |key: &str| -> Result<usize> {
            let (l, v) = get(key)?;
            v.parse::<usize>()
                .map_err(|_| err(l, format!("'{key}' is not a count: '{v}'")))
        };

        let n = count("n")?;
        let d = count("d")?;
        let band_means = floats("band_means")?;
        let band_stds = floats("band_stds")?;
        let targets = floats("targets")?;
        let alpha = floats("alpha")?;
        if inputs.len() != n || inputs.iter().any(|r| r.len() != d) {
            return Err(Error::load(
                "<model>",
                "inputs",
                format!("expected {n} input rows of {d} values"),
            ));
        }
        if targets.len() != n || alpha.len() != n || band_means.len() != d || band_stds.len() != d {
            return Err(Error::load(
                "<model>",
                "arrays",
                "array lengths disagree with n/d",
            ));
        }

        let hyper = Hyperparams::new(
            float("log_lengthscale")?,
            float("log_signal_amp")?,
            float("log_noise_std")?,
        )?;
        let flat: Vec<f64> = inputs.into_iter().flatten().collect();
        let training = TrainingData::from_parts(
            DMatrix::from_row_slice(n, d, &flat),
            DVector::from_vec(targets),
            float("target_mean")?,
            band_means,
            band_stds,
        )?;
        let jitter = float("jitter")?;
        let model = TrainedModel::from_stored(training, hyper, jitter, metadata)?;

        let stored_alpha = DVector::from_vec(alpha);
        let scale = stored_alpha.amax().max(1.0);
        if (model.alpha() - &stored_alpha).amax() > 1e-8 * scale {
            return Err(Error::load(
                "<model>",
                "alpha",
                "stored weights disagree with the recomputed factorization",
            ));
        }
        Ok(model)
    }
}

impl TrainedModel {
    /// Rebuilds the factorization with an exact, previously recorded jitter.
    fn from_stored(
        training: TrainingData,
        hyper: Hyperparams,
        jitter: f64,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(Error::load(
                "<model>",
                "jitter",
                format!("invalid jitter {jitter}"),
            ));
        }
        let k = gram(&rows_of(training.inputs()), &hyper);
        TrainedModel::with_jitter(training, hyper, k, jitter, metadata)
    }
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: '{t}'")))
        .collect()
}
