use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::DEFAULT_SEED;

/// Repeated random train/test partitioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            n_runs: 100,
            seed: DEFAULT_SEED,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::usage(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::usage("at least one run is required"));
        }
        Ok(())
    }

    /// Training-set size: `fraction·n` rounded half up, kept within `[1, n − 1]`.
    pub fn train_count(&self, n_records: usize) -> usize {
        let k = (self.train_fraction * n_records as f64 + 0.5).floor() as usize;
        k.clamp(1, n_records.saturating_sub(1).max(1))
    }
}

/// Partition of `0..n_records` for one run. Both index lists are sorted.
/// Each run index draws from its own stream of the seeded generator.
pub fn split(
    n_records: usize,
    spec: &SplitSpec,
    run_index: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    if n_records < 2 {
        return Err(Error::InsufficientData(format!(
            "cannot split {n_records} records"
        )));
    }
    if run_index >= spec.n_runs {
        return Err(Error::usage(format!(
            "run index {run_index} out of range for {} runs",
            spec.n_runs
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(run_index as u64);
    let mut idx: Vec<usize> = (0..n_records).collect();
    idx.shuffle(&mut rng);
    let k = spec.train_count(n_records);
    let mut train = idx[..k].to_vec();
    let mut test = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighty_twenty() {
        let (tr, te) = split(10, &SplitSpec::default(), 0).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let spec = SplitSpec::default();
        assert_eq!(spec.train_count(26), 21);
        let half = SplitSpec {
            train_fraction: 0.5,
            ..spec
        };
        // 2.5 rounds up
        assert_eq!(half.train_count(5), 3);
        assert_eq!(spec.train_count(2), 1);
    }

    #[test]
    fn disjoint_covering_and_deterministic() {
        let spec = SplitSpec::default();
        for run in 0..20 {
            let (tr, te) = split(37, &spec, run).unwrap();
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..37).collect::<Vec<_>>());
            assert_eq!(split(37, &spec, run).unwrap(), (tr, te));
        }
        assert_ne!(split(37, &spec, 0).unwrap(), split(37, &spec, 1).unwrap());
    }

    #[test]
    fn every_record_tested_over_default_runs() {
        let spec = SplitSpec::default();
        let mut seen = [false; 26];
        for run in 0..spec.n_runs {
            for i in split(26, &spec, run).unwrap().1 {
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn validation() {
        let spec = SplitSpec::default();
        assert!(split(1, &spec, 0).is_err());
        assert!(split(10, &spec, 100).is_err());
        assert!(split(
            10,
            &SplitSpec {
                train_fraction: 1.0,
                ..spec
            },
            0
        )
        .is_err());
        assert!(split(10, &SplitSpec { n_runs: 0, ..spec }, 0).is_err());
    }
}
