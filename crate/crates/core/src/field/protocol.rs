//! Repeated train/evaluate protocol and its on-disk archive.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{split, EsuRecord, Instrument, SplitSpec};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate_runs, compute_stats, EvalStats, RunAggregate};
use crate::gp::{fit, FitConfig, Prediction, TrainedModel, TrainingData};

/// Training set for one instrument: every record with a reading for it, plus
/// non-vegetated records at LAI 0.
pub fn build_training_set(records: &[EsuRecord], instrument: Instrument) -> Result<TrainingData> {
    let usable: Vec<&EsuRecord> = records
        .iter()
        .filter(|r| r.lai(instrument).is_some())
        .collect();
    training_from(&usable, instrument)
}

fn training_from(records: &[&EsuRecord], instrument: Instrument) -> Result<TrainingData> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable records for {}, need at least 2",
            records.len(),
            instrument.label()
        )));
    }
    let d = records[0].reflectance.len();
    let x = DMatrix::from_fn(records.len(), d, |i, j| records[i].reflectance[j]);
    let y: Vec<f64> = records.iter().map(|r| r.lai(instrument).unwrap()).collect();
    TrainingData::from_raw(&x, &y)
}

/// Outcome of one split. Indices refer to the `records` slice given to
/// [`run_protocol`].
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_index: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub model: Option<Arc<TrainedModel>>,
    pub predictions: Vec<Prediction>,
    pub observed: Vec<f64>,
    pub stats: Option<EvalStats>,
    /// Why the run produced no statistics.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn succeeded(&self) -> bool {
        self.stats.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub instrument: Instrument,
    pub runs: Vec<RunResult>,
}

impl ProtocolOutcome {
    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| !r.succeeded()).count()
    }

    /// Aggregate over successful runs; `None` if every run failed.
    pub fn aggregate(&self) -> Option<RunAggregate> {
        let stats: Vec<EvalStats> = self.runs.iter().filter_map(|r| r.stats).collect();
        aggregate_runs(&stats).ok()
    }
}

/// Splits the records usable for `instrument` `spec.n_runs` times, fits a model
/// on each training part, and scores it on the held-out part. Standardization
/// statistics come from the training part only. A failed fit marks its run
/// and the protocol moves on.
pub fn run_protocol(
    records: &[EsuRecord],
    instrument: Instrument,
    spec: &SplitSpec,
    fit_config: &FitConfig,
) -> Result<ProtocolOutcome> {
    spec.validate()?;
    let usable: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].lai(instrument).is_some())
        .collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable records for {}, need at least 2",
            usable.len(),
            instrument.label()
        )));
    }

    let runs = (0..spec.n_runs)
        .into_par_iter()
        .map(|run| one_run(records, &usable, instrument, spec, fit_config, run))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolOutcome { instrument, runs })
}

fn one_run(
    records: &[EsuRecord],
    usable: &[usize],
    instrument: Instrument,
    spec: &SplitSpec,
    fit_config: &FitConfig,
    run: usize,
) -> Result<RunResult> {
    let (train_pos, test_pos) = split(usable.len(), spec, run)?;
    let train_indices: Vec<usize> = train_pos.iter().map(|&p| usable[p]).collect();
    let test_indices: Vec<usize> = test_pos.iter().map(|&p| usable[p]).collect();
    let mut result = RunResult {
        run_index: run,
        train_indices,
        test_indices,
        model: None,
        predictions: Vec::new(),
        observed: Vec::new(),
        stats: None,
        failure: None,
    };

    let train: Vec<&EsuRecord> = result.train_indices.iter().map(|&i| &records[i]).collect();
    let config = FitConfig {
        seed: fit_config.seed.wrapping_add(run as u64),
        ..fit_config.clone()
    };
    let model = match training_from(&train, instrument).and_then(|data| fit(&data, &config)) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("{} run {run}: fit failed: {e}", instrument.label());
            result.failure = Some(e.to_string());
            return Ok(result);
        }
    };
    let model = model
        .with_metadata("instrument", instrument.as_str())
        .with_metadata("run", run.to_string());

    for &i in &result.test_indices {
        let r = &records[i];
        result.predictions.push(model.predict(&r.reflectance)?);
        result.observed.push(r.lai(instrument).unwrap());
    }
    let means: Vec<f64> = result.predictions.iter().map(|p| p.mean).collect();
    match compute_stats(&means, &result.observed) {
        Ok(s) => result.stats = Some(s),
        Err(e) => result.failure = Some(format!("statistics unavailable: {e}")),
    }
    result.model = Some(Arc::new(model));
    Ok(result)
}

/// `runs.csv` contents: one row per run.
pub fn runs_csv(outcome: &ProtocolOutcome) -> String {
    let mut out = String::from(
        "run,status,n_train,n_test,rmse,mae,me,r2,log_lengthscale,log_signal_amp,log_noise_std,evidence,message\n",
    );
    for r in &outcome.runs {
        let status = if r.succeeded() { "ok" } else { "failed" };
        let (rmse, mae, me, r2) = match r.stats {
            Some(s) => (
                s.rmse.to_string(),
                s.mae.to_string(),
                s.me.to_string(),
                s.r2.map(|v| v.to_string()).unwrap_or_else(|| "NA".into()),
            ),
            None => Default::default(),
        };
        let (ell, sf, sn, ev) = match &r.model {
            Some(m) => {
                let h = m.hyper();
                (
                    h.log_lengthscale().to_string(),
                    h.log_signal_amp().to_string(),
                    h.log_noise_std().to_string(),
                    m.evidence().to_string(),
                )
            }
            None => Default::default(),
        };
        let msg = r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            out,
            "{},{status},{},{},{rmse},{mae},{me},{r2},{ell},{sf},{sn},{ev},{msg}",
            r.run_index,
            r.train_indices.len(),
            r.test_indices.len()
        )
        .unwrap();
    }
    out
}

/// Per-run held-out predictions: `run,esu_id,observed,mean,variance`.
pub fn predictions_csv(outcome: &ProtocolOutcome, records: &[EsuRecord]) -> String {
    let mut out = String::from("run,esu_id,observed,mean,variance\n");
    for r in &outcome.runs {
        for ((&i, p), o) in r.test_indices.iter().zip(&r.predictions).zip(&r.observed) {
            writeln!(
                out,
                "{},{},{o},{},{}",
                r.run_index, records[i].esu_id, p.mean, p.variance
            )
            .unwrap();
        }
    }
    out
}

/// Writes `runs.csv`, `predictions.csv`, and `models/run_NNN.model` under `dir`.
pub fn write_archive(dir: &Path, outcome: &ProtocolOutcome, records: &[EsuRecord]) -> Result<()> {
    let models = dir.join("models");
    fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    let runs = dir.join("runs.csv");
    fs::write(&runs, runs_csv(outcome)).map_err(|e| Error::io(&runs, e))?;
    let preds = dir.join("predictions.csv");
    fs::write(&preds, predictions_csv(outcome, records)).map_err(|e| Error::io(&preds, e))?;
    for r in &outcome.runs {
        if let Some(m) = &r.model {
            m.save(&models.join(format!("run_{:03}.model", r.run_index)))?;
        }
    }
    Ok(())
}
