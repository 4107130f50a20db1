//! Test statistics with asymptotic χ² calibration: the one-sample
//! Hotelling-type test, the two-sample test on `(RP^3)^q`, and anti-MANOVA.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_two_sample, BootstrapPlan};
use crate::error::{invalid, Error, Result};
use crate::estimation::{pooled_antimean, sample_antimean, AntimeanEstimate, PooledAntimean};
use crate::manifold::{check_uniform, hamilton, log_chart_shape, shape_group_op, ProjectiveShape};
use crate::numerics::linalg::Matrix;
use crate::numerics::{chisq_quantile, chisq_sf, SymMatrix};
use crate::vw::GapTolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    Asymptotic,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub method: Calibration,
    pub cutoff: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl TestResult {
    /// χ²_df calibration; rejects when `statistic > χ²_{df,1−α}`.
    pub fn asymptotic(statistic: f64, df: u32, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let cutoff = chisq_quantile(1.0 - alpha, df)?;
        Ok(Self {
            statistic,
            df,
            p_value: chisq_sf(statistic.max(0.0), df)?,
            method: Calibration::Asymptotic,
            cutoff,
            alpha,
            reject: statistic > cutoff,
        })
    }

    /// Calibration by a bootstrap cutoff and empirical p-value.
    pub fn bootstrap(statistic: f64, df: u32, alpha: f64, cutoff: f64, p_value: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { statistic, df, p_value, method: Calibration::Bootstrap, cutoff, alpha, reject: statistic > cutoff })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    OneSample,
    TwoSample,
    Manova,
}

/// A null hypothesis: a hypothesised antimean for one sample, or equality
/// of antimeans across two or more groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub kind: HypothesisKind,
    pub null_value: Option<ProjectiveShape>,
}

impl Hypotheses {
    pub fn one_sample(nu: ProjectiveShape) -> Self {
        Self { kind: HypothesisKind::OneSample, null_value: Some(nu) }
    }

    pub fn two_sample() -> Self {
        Self { kind: HypothesisKind::TwoSample, null_value: None }
    }

    pub fn manova() -> Self {
        Self { kind: HypothesisKind::Manova, null_value: None }
    }
}

/// Degrees of freedom used to calibrate the anti-MANOVA statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfMode {
    /// `d = qm` (3q on `(RP^3)^q`).
    #[default]
    PerTheorem3q,
    /// `g·d`.
    PerTheoremGd,
    /// `d(g−1)`, the classical pooled-estimate count.
    ConservativeGMinus1,
}

impl DfMode {
    pub fn df(&self, d: usize, g: usize) -> u32 {
        let df = match self {
            DfMode::PerTheorem3q => d,
            DfMode::PerTheoremGd => g * d,
            DfMode::ConservativeGMinus1 => d * g.saturating_sub(1),
        };
        df.max(1) as u32
    }

    pub fn all() -> [DfMode; 3] {
        [DfMode::PerTheorem3q, DfMode::PerTheoremGd, DfMode::ConservativeGMinus1]
    }
}

/// `n vᵀ aS⁻¹ v` with `v` the tangential coordinates of `nu` at the sample
/// antimean.
pub fn one_sample_statistic(est: &AntimeanEstimate, nu: &ProjectiveShape) -> Result<f64> {
    let v = est.frame.coords(nu)?;
    Ok(est.n as f64 * est.anticov.inverse_quadratic_form(&v.entries)?)
}

/// Asymptotic test of `H₀: antimean = nu`, `df = qm`. Not rejecting is
/// membership of `nu` in the level `1−α` confidence region.
pub fn one_sample_test(est: &AntimeanEstimate, nu: &ProjectiveShape, alpha: f64) -> Result<TestResult> {
    TestResult::asymptotic(one_sample_statistic(est, nu)?, est.frame.dim() as u32, alpha)
}

/// The two-sample vector `aV = √(n₁+n₂) φ(ȳ₂⁻¹ ⊙ ȳ₁)` and its quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleStatistic {
    pub v: Vec<f64>,
    pub covariance: SymMatrix,
    pub statistic: f64,
}

/// `2·L(μ)·D`: the derivative of `x ↦ φ(μ⁻¹ ⊙ x)` at `μ` in the frame `D`,
/// where `L(μ)x` is the vector part of `μ̄ ⊙ x`.
fn chart_jacobian(mu: &[f64], d: &Matrix) -> Matrix {
    let conj = [mu[0], -mu[1], -mu[2], -mu[3]];
    let mut out = Matrix::zeros(3, d.cols());
    for k in 0..d.cols() {
        let c = d.column(k);
        let p = hamilton(conj, [c[0], c[1], c[2], c[3]]);
        for r in 0..3 {
            out.set(r, k, 2.0 * p[r + 1]);
        }
    }
    out
}

/// Block-diagonal chart Jacobian of one group's estimate.
fn group_jacobian(est: &AntimeanEstimate) -> Matrix {
    let q = est.antimean.q();
    let mut m = Matrix::zeros(3 * q, 3 * q);
    for (s, (c, d)) in est.antimean.components().iter().zip(est.frame.bases()).enumerate() {
        let j = chart_jacobian(c.coords(), d);
        for r in 0..3 {
            for k in 0..3 {
                m.set(3 * s + r, 3 * s + k, j.get(r, k));
            }
        }
    }
    m
}

fn require_rp3(est: &AntimeanEstimate) -> Result<()> {
    if est.antimean.m() != 3 {
        return Err(invalid(format!("the two-sample test needs (RP^3)^q data, got m = {}", est.antimean.m())));
    }
    Ok(())
}

/// Two-sample statistic with the delta-method covariance
/// `Σ̂ = n₊ Σ_a M_a aS_a M_aᵀ / n_a`, `M_a` the chart Jacobian at group `a`'s
/// antimean.
pub fn two_sample_statistic(est1: &AntimeanEstimate, est2: &AntimeanEstimate) -> Result<TwoSampleStatistic> {
    require_rp3(est1)?;
    require_rp3(est2)?;
    let rel = shape_group_op(&est2.antimean, &est1.antimean, true)?;
    let n_plus = (est1.n + est2.n) as f64;
    let v: Vec<f64> = log_chart_shape(&rel)?.into_iter().map(|x| n_plus.sqrt() * x).collect();
    let mut covariance = SymMatrix::zeros(v.len());
    for est in [est1, est2] {
        let part = est.anticov.congruence(&group_jacobian(est));
        covariance.add_scaled(&part, n_plus / est.n as f64);
    }
    let statistic = covariance.inverse_quadratic_form(&v)?;
    Ok(TwoSampleStatistic { v, covariance, statistic })
}

/// Asymptotic two-sample test with `df = 3q`.
pub fn two_sample_test(est1: &AntimeanEstimate, est2: &AntimeanEstimate, alpha: f64) -> Result<TestResult> {
    let t = two_sample_statistic(est1, est2)?;
    TestResult::asymptotic(t.statistic, t.v.len() as u32, alpha)
}

/// Where the anti-MANOVA tangent differences are anchored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManovaBase {
    /// Differences between each group antimean and the pooled sample antimean.
    PooledSample,
    /// Differences between each group antimean and a supplied shape, e.g. a
    /// known common antimean in simulations.
    External(ProjectiveShape),
}

/// The anti-MANOVA statistic together with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct ManovaStatistic {
    pub statistic: f64,
    pub estimates: Vec<AntimeanEstimate>,
    pub pooled: PooledAntimean,
    /// Per-group terms `n_a v_aᵀ aS_a⁻¹ v_a`.
    pub contributions: Vec<f64>,
}

/// `T_d = Σ_a n_a v_aᵀ aS_a⁻¹ v_a` with `v_a` the pooled-frame tangential
/// coordinates of group `a`'s antimean (minus those of the external base if
/// given), and `aS_a` built from the pooled eigensystem and group `a`'s
/// observations.
pub fn manova_statistic(samples: &[Vec<ProjectiveShape>], base: &ManovaBase, gap: GapTolerance) -> Result<ManovaStatistic> {
    if samples.is_empty() {
        return Err(invalid("anti-MANOVA needs at least one group"));
    }
    let estimates = samples.iter().map(|s| sample_antimean(s, gap)).collect::<Result<Vec<_>>>()?;
    manova_from_estimates(samples, estimates, base, gap)
}

pub(crate) fn manova_from_estimates(
    samples: &[Vec<ProjectiveShape>],
    estimates: Vec<AntimeanEstimate>,
    base: &ManovaBase,
    gap: GapTolerance,
) -> Result<ManovaStatistic> {
    let all: Vec<ProjectiveShape> = samples.iter().flatten().cloned().collect();
    check_uniform(&all)?;
    let sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
    let pooled = pooled_antimean(&estimates, &sizes, gap)?;
    let offset = match base {
        ManovaBase::PooledSample => None,
        ManovaBase::External(nu) => Some(pooled.frame.coords(nu)?.entries),
    };
    let mut contributions = Vec::with_capacity(samples.len());
    for (sample, est) in samples.iter().zip(&estimates) {
        let mut v = pooled.frame.coords(&est.antimean)?.entries;
        if let Some(off) = &offset {
            v.iter_mut().zip(off).for_each(|(a, b)| *a -= b);
        }
        let cov = pooled.frame.anticovariance(&pooled.axial, sample)?;
        contributions.push(est.n as f64 * cov.inverse_quadratic_form(&v)?);
    }
    Ok(ManovaStatistic { statistic: contributions.iter().sum(), estimates, pooled, contributions })
}

/// Asymptotic anti-MANOVA test. `df_mode` only affects `df`, the p-value and
/// the cutoff.
pub fn manova_test(
    samples: &[Vec<ProjectiveShape>],
    alpha: f64,
    df_mode: DfMode,
    base: &ManovaBase,
    gap: GapTolerance,
) -> Result<TestResult> {
    let t = manova_statistic(samples, base, gap)?;
    TestResult::asymptotic(t.statistic, df_mode.df(t.pooled.frame.dim(), samples.len()), alpha)
}

/// How each pairwise comparison is calibrated.
#[derive(Debug, Clone, PartialEq)]
pub enum PairwiseCalibration {
    Asymptotic,
    Bootstrap(BootstrapPlan),
}

/// One cell of the pairwise comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseEntry {
    pub first: usize,
    pub second: usize,
    pub result: std::result::Result<TestResult, String>,
}

impl PairwiseEntry {
    pub fn reject(&self) -> Option<bool> {
        self.result.as_ref().ok().map(|r| r.reject)
    }
}

/// Two-sample tests for every unordered pair `i < j`; a failing pair is
/// recorded and the others still run.
pub fn pairwise_manova(
    samples: &[Vec<ProjectiveShape>],
    alpha: f64,
    calibration: &PairwiseCalibration,
    gap: GapTolerance,
) -> Result<Vec<PairwiseEntry>> {
    if samples.len() < 2 {
        return Err(invalid("pairwise comparisons need at least two groups"));
    }
    check_alpha(alpha)?;
    let mut out = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let result = pair_test(&samples[i], &samples[j], alpha, calibration, gap).map_err(|e| e.to_string());
            out.push(PairwiseEntry { first: i, second: j, result });
        }
    }
    Ok(out)
}

fn pair_test(
    a: &[ProjectiveShape],
    b: &[ProjectiveShape],
    alpha: f64,
    calibration: &PairwiseCalibration,
    gap: GapTolerance,
) -> Result<TestResult> {
    match calibration {
        PairwiseCalibration::Asymptotic => {
            let (ea, eb) = (sample_antimean(a, gap)?, sample_antimean(b, gap)?);
            two_sample_test(&ea, &eb, alpha)
        }
        PairwiseCalibration::Bootstrap(plan) => {
            let r = bootstrap_two_sample(a, b, plan, 1.0 - alpha, gap)?;
            let observed = r.observed.ok_or_else(|| Error::NoConvergence("missing observed statistic".into()))?;
            TestResult::bootstrap(observed, (3 * a[0].q()) as u32, alpha, r.cutoff, r.empirical_p.unwrap_or(1.0))
        }
    }
}
