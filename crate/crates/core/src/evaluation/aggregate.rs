//! Mean(std) aggregation over repeated runs and the tabular report layout.

use std::fmt::Write as _;

use super::EvalStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator), 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }

    /// `0.51(0.18)`
    pub fn cell(&self) -> String {
        format!("{:.2}({:.2})", self.mean, self.std)
    }
}

/// Per-statistic mean and spread over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunAggregate {
    pub rmse: MeanStd,
    pub mae: MeanStd,
    /// Aggregated over |ME| of each run.
    pub abs_me: MeanStd,
    /// `None` if no run had a defined r².
    pub r2: Option<MeanStd>,
    pub n_runs_used: usize,
    pub n_r2_used: usize,
}

pub fn aggregate_runs(stats: &[EvalStats]) -> Result<RunAggregate> {
    if stats.is_empty() {
        return Err(Error::usage("cannot aggregate an empty run list"));
    }
    // sort each column so the result does not depend on run order
    let column = |f: &dyn Fn(&EvalStats) -> f64| {
        let mut v: Vec<f64> = stats.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let mut r2: Vec<f64> = stats.iter().filter_map(|s| s.r2).collect();
    r2.sort_by(f64::total_cmp);
    Ok(RunAggregate {
        rmse: MeanStd::of(&column(&|s| s.rmse)).unwrap(),
        mae: MeanStd::of(&column(&|s| s.mae)).unwrap(),
        abs_me: MeanStd::of(&column(&|s| s.me.abs())).unwrap(),
        r2: MeanStd::of(&r2),
        n_runs_used: stats.len(),
        n_r2_used: r2.len(),
    })
}

impl RunAggregate {
    /// The four `mean(std)` cells: RMSE, MAE, |ME|, R².
    pub fn cells(&self) -> [String; 4] {
        [
            self.rmse.cell(),
            self.mae.cell(),
            self.abs_me.cell(),
            self.r2.map(|r| r.cell()).unwrap_or_else(|| "NA".into()),
        ]
    }

    /// Space-separated row, e.g. `0.51(0.18) 0.35(0.19) 0.12(0.07) 0.94(0.07)`.
    pub fn row(&self) -> String {
        self.cells().join(" ")
    }
}

/// Rows = datasets, columns = RMSE, MAE, |ME|, R².
#[derive(Debug, Clone, Default)]
pub struct StatsReport {
    pub rows: Vec<(String, RunAggregate)>,
}

const COLUMNS: [&str; 4] = ["RMSE", "MAE", "|ME|", "R2"];

impl StatsReport {
    pub fn push(&mut self, dataset: impl Into<String>, agg: RunAggregate) {
        self.rows.push((dataset.into(), agg));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,rmse,mae,abs_me,r2,n_runs\n");
        for (name, agg) in &self.rows {
            let c = agg.cells();
            writeln!(
                out,
                "{name},{},{},{},{},{}",
                c[0], c[1], c[2], c[3], agg.n_runs_used
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let name_w = self
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .chain(std::iter::once("Dataset".len()))
            .max()
            .unwrap();
        let cells: Vec<[String; 4]> = self.rows.iter().map(|(_, a)| a.cells()).collect();
        let col_w: Vec<usize> = (0..4)
            .map(|k| {
                cells
                    .iter()
                    .map(|c| c[k].len())
                    .chain(std::iter::once(COLUMNS[k].len()))
                    .max()
                    .unwrap()
            })
            .collect();
        let mut out = format!("{:<name_w$}", "Dataset");
        for k in 0..4 {
            write!(out, "  {:>w$}", COLUMNS[k], w = col_w[k]).unwrap();
        }
        out.push('\n');
        for ((name, _), c) in self.rows.iter().zip(&cells) {
            write!(out, "{name:<name_w$}").unwrap();
            for k in 0..4 {
                write!(out, "  {:>w$}", c[k], w = col_w[k]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(rmse: f64, mae: f64, me: f64, r2: Option<f64>) -> EvalStats {
        EvalStats {
            rmse,
            mae,
            me,
            r2,
            n: 5,
        }
    }

    #[test]
    fn single_run_has_zero_spread() {
        let a = aggregate_runs(&[stats(0.5, 0.4, -0.1, Some(0.9))]).unwrap();
        assert_eq!(
            a.rmse,
            MeanStd {
                mean: 0.5,
                std: 0.0
            }
        );
        assert_eq!(a.abs_me.mean, 0.1);
        assert_eq!(a.r2.unwrap().std, 0.0);
    }

    #[test]
    fn identical_runs() {
        let s = stats(0.7, 0.5, 0.2, Some(0.8));
        let a = aggregate_runs(&[s; 6]).unwrap();
        assert!((a.rmse.mean - 0.7).abs() < 1e-15 && a.rmse.std < 1e-15);
        assert!((a.mae.mean - 0.5).abs() < 1e-15 && a.mae.std < 1e-15);
        assert!(a.r2.unwrap().std < 1e-15);
    }

    #[test]
    fn missing_r2_excluded_only_from_r2() {
        let a = aggregate_runs(&[stats(1.0, 0.5, 0.1, None), stats(3.0, 0.5, -0.3, Some(0.5))])
            .unwrap();
        assert_eq!(a.n_runs_used, 2);
        assert_eq!(a.n_r2_used, 1);
        assert_eq!(a.rmse.mean, 2.0);
        assert!((a.abs_me.mean - 0.2).abs() < 1e-15);
        assert_eq!(a.r2.unwrap().mean, 0.5);
    }

    #[test]
    fn empty_is_usage_error() {
        assert!(matches!(aggregate_runs(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn order_does_not_matter() {
        let runs: Vec<EvalStats> = (0..9)
            .map(|i| {
                stats(
                    0.1 * i as f64 + 0.3,
                    0.05 * i as f64,
                    0.01 * i as f64 - 0.04,
                    Some(0.9 - 0.01 * i as f64),
                )
            })
            .collect();
        let mut rev = runs.clone();
        rev.reverse();
        assert_eq!(
            aggregate_runs(&runs).unwrap(),
            aggregate_runs(&rev).unwrap()
        );
    }

    #[test]
    fn table_row_format() {
        // two runs at mean ± s/√2 have sample std s
        let pair = |m: f64, s: f64| [m + s / 2f64.sqrt(), m - s / 2f64.sqrt()];
        let (r, a, e, q) = (
            pair(0.51, 0.18),
            pair(0.35, 0.19),
            pair(0.12, 0.07),
            pair(0.94, 0.07),
        );
        let runs = [
            stats(r[0], a[0], e[0], Some(q[0])),
            stats(r[1], a[1], -e[1], Some(q[1])),
        ];
        let agg = aggregate_runs(&runs).unwrap();
        assert_eq!(agg.row(), "0.51(0.18) 0.35(0.19) 0.12(0.07) 0.94(0.07)");

        let mut report = StatsReport::default();
        report.push("LAI_APP", agg);
        let csv = report.to_csv();
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "LAI_APP,0.51(0.18),0.35(0.19),0.12(0.07),0.94(0.07),2"
        );
        let text = report.to_text();
        assert!(text.lines().next().unwrap().starts_with("Dataset"));
        assert!(text.contains("0.94(0.07)"));
    }
}
