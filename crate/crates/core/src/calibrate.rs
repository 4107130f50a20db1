//! Monte Carlo checks of size, coverage and power on synthetic data.
//!
//! Replication `r` derives its seeds from `RngStream::new(seed, 0).derive(r)`,
//! so a run is reproducible regardless of thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_manova, bootstrap_one_sample, bootstrap_two_sample, BootstrapPlan, Centering};
use crate::error::{invalid, Error, Result};
use crate::estimation::sample_antimean;
use crate::inference::{check_alpha, manova_statistic, one_sample_statistic, ManovaBase};
use crate::numerics::{chisq_quantile, RngStream};
use crate::data::{synth_sample, true_antimean, SynthSpec};
use crate::vw::GapTolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    /// What was counted: `"reject"` or `"cover"`.
    pub event: String,
    pub reps: usize,
    pub failures: usize,
    pub successes: usize,
    pub rate: f64,
    /// Binomial standard error `√(rate(1−rate)/completed)`.
    pub standard_error: f64,
    /// Statistic values of the completed replications, in replication order.
    pub statistics: Vec<f64>,
}

impl CalibrationSummary {
    /// Empirical quantile (rank `⌈p·N⌉`) of the recorded statistics.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if self.statistics.is_empty() {
            return None;
        }
        let mut s = self.statistics.clone();
        s.sort_by(f64::total_cmp);
        let rank = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
        Some(s[rank - 1])
    }

    fn build(event: &str, reps: usize, outcomes: Vec<Result<(f64, bool)>>) -> Result<Self> {
        let mut statistics = Vec::with_capacity(reps);
        let mut successes = 0;
        let mut last = None;
        for o in outcomes {
            match o {
                Ok((s, hit)) => {
                    statistics.push(s);
                    successes += hit as usize;
                }
                Err(e) => last = Some(e),
            }
        }
        let done = statistics.len();
        if done == 0 {
            return Err(Error::BootstrapDegenerate { attempted: reps, last: last.map(|e| e.to_string()).unwrap_or_default() });
        }
        let rate = successes as f64 / done as f64;
        Ok(Self {
            event: event.into(),
            reps,
            failures: reps - done,
            successes,
            rate,
            standard_error: (rate * (1.0 - rate) / done as f64).sqrt(),
            statistics,
        })
    }
}

fn replicate<F>(reps: usize, seed: u64, f: F) -> Vec<Result<(f64, bool)>>
where
    F: Fn(RngStream) -> Result<(f64, bool)> + Sync,
{
    let root = RngStream::new(seed, 0);
    (0..reps).into_par_iter().map(|r| f(root.derive(r as u64))).collect()
}

fn with_seed(spec: &SynthSpec, stream: RngStream, label: u64) -> SynthSpec {
    SynthSpec { seed: stream.derive(label).seed, ..spec.clone() }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(invalid("need at least one replication"));
    }
    Ok(())
}

/// Size of the asymptotic one-sample test at the true antimean.
pub fn one_sample_size(spec: &SynthSpec, reps: usize, alpha: f64, seed: u64, gap: GapTolerance) -> Result<CalibrationSummary> {
    check_reps(reps)?;
    check_alpha(alpha)?;
    let truth = true_antimean(spec)?;
    let cutoff = chisq_quantile(1.0 - alpha, (truth.q() * truth.m()) as u32)?;
    let out = replicate(reps, seed, |st| {
        let est = sample_antimean(&synth_sample(&with_seed(spec, st, 0))?, gap)?;
        let t = one_sample_statistic(&est, &truth)?;
        Ok((t, t > cutoff))
    });
    CalibrationSummary::build("reject", reps, out)
}

/// Coverage of the true antimean by the bootstrap confidence region.
pub fn bootstrap_coverage(
    spec: &SynthSpec,
    resamples: usize,
    reps: usize,
    confidence: f64,
    seed: u64,
    gap: GapTolerance,
) -> Result<CalibrationSummary> {
    check_reps(reps)?;
    let truth = true_antimean(spec)?;
    let out = replicate(reps, seed, |st| {
        let sample = synth_sample(&with_seed(spec, st, 0))?;
        let plan = BootstrapPlan::new(resamples, st.derive(1).seed);
        let r = bootstrap_one_sample(&sample, Some(&truth), &plan, confidence, gap)?;
        let t = r.observed.expect("null supplied");
        Ok((t, t <= r.cutoff))
    });
    CalibrationSummary::build("cover", reps, out)
}

/// Rejection rate of the bootstrap two-sample test.
pub fn two_sample_bootstrap_rate(
    spec1: &SynthSpec,
    spec2: &SynthSpec,
    resamples: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
    gap: GapTolerance,
) -> Result<CalibrationSummary> {
    check_reps(reps)?;
    check_alpha(alpha)?;
    let out = replicate(reps, seed, |st| {
        let a = synth_sample(&with_seed(spec1, st, 0))?;
        let b = synth_sample(&with_seed(spec2, st, 1))?;
        let plan = BootstrapPlan::new(resamples, st.derive(2).seed);
        let r = bootstrap_two_sample(&a, &b, &plan, 1.0 - alpha, gap)?;
        let t = r.observed.expect("two-sample statistic is always observed");
        Ok((t, t > r.cutoff))
    });
    CalibrationSummary::build("reject", reps, out)
}

/// Null distribution of the anti-MANOVA statistic; rejections are counted
/// against `cutoff`.
pub fn manova_null(specs: &[SynthSpec], reps: usize, cutoff: f64, seed: u64, gap: GapTolerance) -> Result<CalibrationSummary> {
    check_reps(reps)?;
    if specs.is_empty() {
        return Err(invalid("need at least one group"));
    }
    let out = replicate(reps, seed, |st| {
        let groups = specs
            .iter()
            .enumerate()
            .map(|(a, s)| synth_sample(&with_seed(s, st, a as u64)))
            .collect::<Result<Vec<_>>>()?;
        let t = manova_statistic(&groups, &ManovaBase::PooledSample, gap)?.statistic;
        Ok((t, t > cutoff))
    });
    CalibrationSummary::build("reject", reps, out)
}

/// Rejection rate of the bootstrap-calibrated anti-MANOVA test.
pub fn manova_bootstrap_rate(
    specs: &[SynthSpec],
    resamples: usize,
    reps: usize,
    alpha: f64,
    centering: Centering,
    seed: u64,
    gap: GapTolerance,
) -> Result<CalibrationSummary> {
    check_reps(reps)?;
    check_alpha(alpha)?;
    let out = replicate(reps, seed, |st| {
        let groups = specs
            .iter()
            .enumerate()
            .map(|(a, s)| synth_sample(&with_seed(s, st, a as u64)))
            .collect::<Result<Vec<_>>>()?;
        let plan = BootstrapPlan::new(resamples, st.derive(1000).seed);
        let r = bootstrap_manova(&groups, &plan, 1.0 - alpha, centering, gap)?;
        let t = r.observed.expect("observed statistic");
        Ok((t, t > r.cutoff))
    });
    CalibrationSummary::build("reject", reps, out)
}
