//! Nonparametric bootstrap calibration.
//!
//! Resample `b` draws every group, in group order, from the single generator
//! `RngStream::new(seed, b)`. Resamples run in parallel and are merged in
//! index order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimation::{axial_moments, pooled_antimean, sample_antimean};
use crate::inference::{manova_from_estimates, manova_statistic, one_sample_statistic, two_sample_statistic, ManovaBase};
use crate::manifold::{canonicalize, ProjectiveShape};
use crate::numerics::linalg::dot;
use crate::numerics::{RngStream, StreamRng};
use crate::vw::GapTolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Drop resamples whose statistic is undefined and count them.
    #[default]
    SkipAndCount,
    /// Fail on the first undefined resample.
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub resamples: usize,
    pub seed: u64,
    #[serde(default)]
    pub failure_policy: FailurePolicy,
}

impl BootstrapPlan {
    pub fn new(resamples: usize, seed: u64) -> Self {
        Self { resamples, seed, failure_policy: FailurePolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Successful resample statistics in resample order.
    pub values: Vec<f64>,
    pub confidence: f64,
    pub cutoff: f64,
    pub n_failed: usize,
    /// The statistic on the original data, when one is defined.
    pub observed: Option<f64>,
    /// `(1 + #{values ≥ observed}) / (|values| + 1)`.
    pub empirical_p: Option<f64>,
}

/// The order statistic of rank `⌈c·N⌉` (1-based, ascending): the upper
/// `100(1−c)%` point of the values.
pub fn bootstrap_cutoff(values: &[f64], confidence: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("no bootstrap values"));
    }
    check_confidence(confidence)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((confidence * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

pub fn empirical_p(values: &[f64], observed: f64) -> f64 {
    let exceed = values.iter().filter(|&&v| v >= observed).count();
    (1 + exceed) as f64 / (values.len() + 1) as f64
}

fn check_confidence(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("confidence must lie in (0,1), got {c}")))
    }
}

fn draw(rng: &mut StreamRng, sample: &[ProjectiveShape]) -> Vec<ProjectiveShape> {
    (0..sample.len()).map(|_| sample[rng.index(sample.len())].clone()).collect()
}

/// Draws resample `b` of every group.
fn resample_groups(plan: &BootstrapPlan, b: usize, groups: &[&[ProjectiveShape]]) -> Vec<Vec<ProjectiveShape>> {
    let mut rng = RngStream::new(plan.seed, b as u64).generator();
    groups.iter().map(|g| draw(&mut rng, g)).collect()
}

fn run<F>(plan: &BootstrapPlan, confidence: f64, observed: Option<f64>, stat: F) -> Result<BootstrapResult>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if plan.resamples == 0 {
        return Err(invalid("the bootstrap needs at least one resample"));
    }
    check_confidence(confidence)?;
    let outcomes: Vec<Result<f64>> = (0..plan.resamples).into_par_iter().map(&stat).collect();
    let mut values = Vec::with_capacity(outcomes.len());
    let mut last = None;
    for o in outcomes {
        match o {
            Ok(v) => values.push(v),
            Err(e) if plan.failure_policy == FailurePolicy::Abort => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    if values.is_empty() {
        return Err(Error::BootstrapDegenerate {
            attempted: plan.resamples,
            last: last.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok(BootstrapResult {
        cutoff: bootstrap_cutoff(&values, confidence)?,
        n_failed: plan.resamples - values.len(),
        empirical_p: observed.map(|o| empirical_p(&values, o)),
        observed,
        confidence,
        values,
    })
}

/// Bootstrap distribution of the one-sample statistic
/// `n ‖aS*^{-1/2} tan(ȳ* − ȳ)‖²`, with tangent coordinates and `aS*` both
/// expressed in the original sample antimean's frame.
///
/// With `null` given, `observed` and `empirical_p` refer to
/// `H₀: antimean = null`; `{ν : T(ν) ≤ cutoff}` is the bootstrap confidence
/// region either way.
pub fn bootstrap_one_sample(
    sample: &[ProjectiveShape],
    null: Option<&ProjectiveShape>,
    plan: &BootstrapPlan,
    confidence: f64,
    gap: GapTolerance,
) -> Result<BootstrapResult> {
    let est = sample_antimean(sample, gap)?;
    let observed = null.map(|nu| one_sample_statistic(&est, nu)).transpose()?;
    run(plan, confidence, observed, |b| {
        let star = &resample_groups(plan, b, &[sample])[0];
        let axial = axial_moments(star)?;
        let antimean = axial.antimean(gap)?;
        let cov = est.frame.anticovariance(&axial, star)?;
        let v = est.frame.coords(&antimean)?;
        Ok(sample.len() as f64 * cov.inverse_quadratic_form(&v.entries)?)
    })
}

/// Bootstrap distribution of the recentred two-sample form
/// `(aV* − aV)ᵀ Σ̂*⁻¹ (aV* − aV)`, which approximates the null law of the
/// observed `aVᵀ Σ̂⁻¹ aV` whether or not the null holds.
pub fn bootstrap_two_sample(
    sample1: &[ProjectiveShape],
    sample2: &[ProjectiveShape],
    plan: &BootstrapPlan,
    confidence: f64,
    gap: GapTolerance,
) -> Result<BootstrapResult> {
    let obs = two_sample_statistic(&sample_antimean(sample1, gap)?, &sample_antimean(sample2, gap)?)?;
    run(plan, confidence, Some(obs.statistic), |b| {
        let star = resample_groups(plan, b, &[sample1, sample2]);
        let t = two_sample_statistic(&sample_antimean(&star[0], gap)?, &sample_antimean(&star[1], gap)?)?;
        let diff: Vec<f64> = t.v.iter().zip(&obs.v).map(|(a, o)| a - o).collect();
        t.covariance.inverse_quadratic_form(&diff)
    })
}

/// How anti-MANOVA resamples are tied to the null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Resamples are drawn from the original groups. In the original pooled
    /// frame each group term is `u_a = (v_a* − p*) − v_a`, where `v_a*` and
    /// `p*` are the resample group and pooled antimeans and `v_a` the observed
    /// group antimean, whitened by the observed `aS_a` that `T_d` itself uses. No resample covariance is inverted, so this also works for
    /// groups too small for `aS_a*` to be nonsingular.
    #[default]
    Recentred,
    /// Each group is first rotated so that its antimean coincides with the
    /// pooled antimean; resamples are drawn from the rotated groups and the
    /// full statistic is recomputed on each.
    ///
    /// Calibrated under the null for moderate group sizes, but with little
    /// power: the rotated groups share an antimean, so resamples see a sharper
    /// pooled eigengap than the observed data and `T*` runs large.
    NullImposed,
    /// Resamples are drawn from the original groups; each group term is the
    /// tangential difference, at the resample's pooled antimean, between the
    /// resample group antimean and the ORIGINAL pooled antimean, whitened by
    /// the resample `aS_a*`. Under an alternative the resample terms grow
    /// with the true group separation, so the test has little power.
    PooledAnchor,
}

/// Rotation in the plane of unit vectors `u`, `v` (with `u·v > -1`)
/// taking `u` to `v`, fixing the orthogonal complement.
fn plane_rotation(u: &[f64], v: &[f64], x: &[f64]) -> Vec<f64> {
    let c = dot(u, v);
    let s: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let fs = dot(&s, x) / (1.0 + c);
    let fu = 2.0 * dot(u, x);
    x.iter().zip(&s).zip(v).map(|((xi, si), vi)| xi - fs * si + fu * vi).collect()
}

/// Moves every observation of a group so the group antimean lands on `target`.
fn impose_antimean(sample: &[ProjectiveShape], from: &ProjectiveShape, target: &ProjectiveShape) -> Result<Vec<ProjectiveShape>> {
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = from
        .components()
        .iter()
        .zip(target.components())
        .map(|(f, t)| (f.aligned_to(t.coords()), t.coords().to_vec()))
        .collect();
    sample
        .iter()
        .map(|x| {
            let comps = x
                .components()
                .iter()
                .zip(&pairs)
                .map(|(c, (u, v))| canonicalize(&plane_rotation(u, v, c.coords())))
                .collect::<Result<Vec<_>>>()?;
            ProjectiveShape::new(comps)
        })
        .collect()
}

/// Bootstrap calibration of the anti-MANOVA statistic `T_d`.
pub fn bootstrap_manova(
    samples: &[Vec<ProjectiveShape>],
    plan: &BootstrapPlan,
    confidence: f64,
    centering: Centering,
    gap: GapTolerance,
) -> Result<BootstrapResult> {
    let obs = manova_statistic(samples, &ManovaBase::PooledSample, gap)?;
    let groups: Vec<Vec<ProjectiveShape>> = match centering {
        Centering::NullImposed => samples
            .iter()
            .zip(&obs.estimates)
            .map(|(s, e)| impose_antimean(s, &e.antimean, &obs.pooled.antimean))
            .collect::<Result<_>>()?,
        Centering::PooledAnchor | Centering::Recentred => samples.to_vec(),
    };
    let frame = &obs.pooled.frame;
    let fixed = if centering == Centering::Recentred {
        samples
            .iter()
            .zip(&obs.estimates)
            .map(|(s, e)| Ok((frame.coords(&e.antimean)?.entries, frame.anticovariance(&obs.pooled.axial, s)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let refs: Vec<&[ProjectiveShape]> = groups.iter().map(|g| g.as_slice()).collect();
    let original_pooled = obs.pooled.antimean.clone();
    run(plan, confidence, Some(obs.statistic), |b| {
        let star = resample_groups(plan, b, &refs);
        let estimates = star.iter().map(|s| sample_antimean(s, gap)).collect::<Result<Vec<_>>>()?;
        match centering {
            Centering::NullImposed => {
                Ok(manova_from_estimates(&star, estimates, &ManovaBase::PooledSample, gap)?.statistic)
            }
            Centering::PooledAnchor => {
                let sizes: Vec<usize> = star.iter().map(|s| s.len()).collect();
                let pooled = pooled_antimean(&estimates, &sizes, gap)?;
                let anchor = pooled.frame.coords(&original_pooled)?.entries;
                let mut total = 0.0;
                for (s, e) in star.iter().zip(&estimates) {
                    let mut v = pooled.frame.coords(&e.antimean)?.entries;
                    v.iter_mut().zip(&anchor).for_each(|(a, o)| *a -= o);
                    let cov = pooled.frame.anticovariance(&pooled.axial, s)?;
                    total += s.len() as f64 * cov.inverse_quadratic_form(&v)?;
                }
                Ok(total)
            }
            Centering::Recentred => {
                let sizes: Vec<usize> = star.iter().map(|s| s.len()).collect();
                let p = frame.coords(&pooled_antimean(&estimates, &sizes, gap)?.antimean)?.entries;
                let mut total = 0.0;
                for ((s, e), (center, cov)) in star.iter().zip(&estimates).zip(&fixed) {
                    let mut v = frame.coords(&e.antimean)?.entries;
                    v.iter_mut().zip(center).zip(&p).for_each(|((a, o), q)| *a -= o + q);
                    total += s.len() as f64 * cov.inverse_quadratic_form(&v)?;
                }
                Ok(total)
            }
        }
    })
}
