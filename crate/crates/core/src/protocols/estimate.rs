//! Monte-Carlo estimate of the fooling probability.
//!
//! Trial `i` draws everything from [`TrialRngs::for_trial`]`(seed, i)`, so
//! results depend only on `(seed, setup, trials)` and never on the number
//! of worker threads.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, AdversaryModel, Setup, TrialOutcome, TrialRngs, Verdict};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub trials: u64,
    pub accepts: u64,
    pub aborts: u64,
    pub fooled: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    /// The upper end of the interval is at most the bound.
    pub bound_satisfied: bool,
}

impl EstimateResult {
    pub fn from_counts(trials: u64, accepts: u64, fooled: u64, bound: f64) -> Self {
        let (ci_low, ci_high) = wilson_interval(fooled, trials, Z95);
        EstimateResult {
            trials,
            accepts,
            aborts: trials - accepts,
            fooled,
            p_hat: if trials == 0 { 0.0 } else { fooled as f64 / trials as f64 },
            ci_low,
            ci_high,
            bound,
            bound_satisfied: ci_high <= bound,
        }
    }

    pub fn from_records(records: &[TrialRecord], bound: f64) -> Self {
        let accepts = records.iter().filter(|r| r.outcome == Verdict::Accept).count() as u64;
        let fooled = records.iter().filter(|r| r.outcome == Verdict::Accept && r.logical_flag).count() as u64;
        EstimateResult::from_counts(records.len() as u64, accepts, fooled, bound)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub outcome: Verdict,
    pub trap_flips: usize,
    pub syndrome_count: usize,
    pub logical_flag: bool,
}

impl TrialRecord {
    fn new(trial_id: u64, o: &TrialOutcome) -> Self {
        TrialRecord {
            trial_id,
            outcome: o.verdict,
            trap_flips: o.trap_flips,
            syndrome_count: o.syndrome_count,
            logical_flag: o.logical,
        }
    }
}

pub fn write_records_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    Ok(())
}

/// Runs all trials and keeps every record, in trial order.
pub fn run_trials(
    setup: &Setup,
    adversary: &AdversaryModel,
    seed: u64,
    trials: u64,
    jobs: usize,
) -> Result<Vec<TrialRecord>> {
    check_trials(trials)?;
    run_trial_range(setup, adversary, seed, 0..trials, jobs)
}

/// Records of the trials with ids in `ids`, in order; lets callers stream
/// long runs in chunks.
pub fn run_trial_range(
    setup: &Setup,
    adversary: &AdversaryModel,
    seed: u64,
    ids: Range<u64>,
    jobs: usize,
) -> Result<Vec<TrialRecord>> {
    let one = |i: u64| -> Result<TrialRecord> {
        let o = run_trial(setup, adversary, &mut TrialRngs::for_trial(seed, i))?;
        Ok(TrialRecord::new(i, &o))
    };
    if jobs <= 1 {
        return ids.map(one).collect();
    }
    pool(jobs)?.install(|| ids.into_par_iter().map(one).collect())
}

/// Counts only; memory does not grow with the number of trials.
pub fn estimate_fooling(
    setup: &Setup,
    adversary: &AdversaryModel,
    seed: u64,
    trials: u64,
    jobs: usize,
) -> Result<EstimateResult> {
    check_trials(trials)?;
    let one = |i: u64| -> Result<(u64, u64)> {
        let o = run_trial(setup, adversary, &mut TrialRngs::for_trial(seed, i))?;
        Ok(((o.verdict == Verdict::Accept) as u64, o.fooled() as u64))
    };
    let add = |a: Result<(u64, u64)>, b: Result<(u64, u64)>| {
        let (a, b) = (a?, b?);
        Ok((a.0 + b.0, a.1 + b.1))
    };
    let (accepts, fooled) = if jobs <= 1 {
        (0..trials).map(one).try_fold((0, 0), |acc, r| r.map(|(a, f)| (acc.0 + a, acc.1 + f)))?
    } else {
        pool(jobs)?.install(|| (0..trials).into_par_iter().map(one).reduce(|| Ok((0, 0)), add))?
    };
    Ok(EstimateResult::from_counts(trials, accepts, fooled, setup.bound()))
}
