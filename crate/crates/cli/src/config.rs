//! Run configuration: an optional JSON file overridden by command-line flags.

use std::path::{Path, PathBuf};

use antimean::bootstrap::Centering;
use antimean::data::FrameSpec;
use antimean::inference::DfMode;
use antimean::manifold::ProjectiveShape;
use antimean::vw::GapTolerance;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
pub enum DfArg {
    #[default]
    #[value(name = "3q")]
    #[serde(rename = "3q")]
    ThreeQ,
    #[value(name = "g3q")]
    #[serde(rename = "g3q")]
    G3q,
    #[value(name = "gminus1")]
    #[serde(rename = "gminus1")]
    GMinus1,
}

impl DfArg {
    pub fn mode(self) -> DfMode {
        match self {
            DfArg::ThreeQ => DfMode::PerTheorem3q,
            DfArg::G3q => DfMode::PerTheoremGd,
            DfArg::GMinus1 => DfMode::ConservativeGMinus1,
        }
    }

    pub fn all() -> [DfArg; 3] {
        [DfArg::ThreeQ, DfArg::G3q, DfArg::GMinus1]
    }

    pub fn label(self) -> &'static str {
        match self {
            DfArg::ThreeQ => "3q",
            DfArg::G3q => "g3q",
            DfArg::GMinus1 => "gminus1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringArg {
    Recentred,
    NullImposed,
    PooledAnchor,
}

impl CenteringArg {
    pub fn centering(self) -> Centering {
        match self {
            CenteringArg::Recentred => Centering::Recentred,
            CenteringArg::NullImposed => Centering::NullImposed,
            CenteringArg::PooledAnchor => Centering::PooledAnchor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationKind {
    /// Size of the asymptotic one-sample test.
    Size,
    /// Coverage of the one-sample bootstrap region.
    Coverage,
    /// Rejection rate of the bootstrap two-sample test (two centers).
    TwoSample,
    /// Null distribution of the anti-MANOVA statistic against χ².
    ManovaNull,
    /// Rejection rate of the bootstrap anti-MANOVA test.
    ManovaBoot,
}

/// A gap tolerance written as a bare number (relative to the trace) or as
/// `abs:<value>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GapTolText {
    Number(f64),
    Text(String),
}

impl GapTolText {
    pub fn parse(&self) -> Result<GapTolerance, CliError> {
        let (abs, v) = match self {
            GapTolText::Number(v) => (false, *v),
            GapTolText::Text(t) => match t.strip_prefix("abs:") {
                Some(rest) => (true, parse_f64(rest)?),
                None => (false, parse_f64(t.strip_prefix("rel:").unwrap_or(t))?),
            },
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::usage(format!("gap tolerance must be a nonnegative number, got {v}")));
        }
        Ok(if abs { GapTolerance::Absolute(v) } else { GapTolerance::Relative(v) })
    }
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::usage(format!("not a number: {s:?}")))
}

/// Flags shared by every command. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Landmark file (CSV or JSON). Repeat for one group per file.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Name of the column holding group labels.
    #[arg(long, alias = "group-column")]
    pub groups: Option<String>,
    /// 1-based indices of the five frame landmarks.
    #[arg(long)]
    pub frame: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bootstrap resamples; 0 skips the bootstrap.
    #[arg(long)]
    pub boot: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub df_mode: Option<DfArg>,
    /// Focal-gap tolerance: a number relative to the trace, or `abs:<value>`.
    #[arg(long)]
    pub gap_tol: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Command-specific flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ExtraArgs {
    /// Null antimean for `test1`, components separated by `;`, e.g. `0,1,0,0`.
    #[arg(long)]
    pub null: Option<String>,
    /// Also run every pairwise two-sample comparison (`manova`).
    #[arg(long)]
    pub pairwise: bool,
    #[arg(long, value_enum)]
    pub centering: Option<CenteringArg>,
    /// Synthetic center, components separated by `;`. Repeat for groups.
    #[arg(long)]
    pub center: Vec<String>,
    /// Synthetic concentration κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Synthetic sample size(s): one value, or one per center.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Synthetic spread along `(c, e_1, …, e_m)`, comma separated.
    #[arg(long)]
    pub spread: Option<String>,
    /// Monte Carlo replications (`calibrate`).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<CalibrationKind>,
}

/// The on-disk run configuration. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub input: Vec<PathBuf>,
    #[serde(default)]
    pub group_column: Option<String>,
    #[serde(default)]
    pub frame_indices: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub resamples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub df_mode: Option<DfArg>,
    #[serde(default)]
    pub gap_tol: Option<GapTolText>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub null: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub pairwise: Option<bool>,
    #[serde(default)]
    pub centering: Option<CenteringArg>,
    #[serde(default)]
    pub centers: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub spread: Option<Vec<f64>>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub kind: Option<CalibrationKind>,
}

/// Fully resolved settings for one run, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub input: Vec<PathBuf>,
    pub group_column: Option<String>,
    pub frame_indices: Vec<usize>,
    pub alpha: f64,
    pub resamples: usize,
    pub seed: u64,
    pub df_mode: DfArg,
    pub gap_tol: GapTolerance,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null: Option<Vec<Vec<f64>>>,
    pub pairwise: bool,
    pub centering: CenteringArg,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub centers: Vec<Vec<Vec<f64>>>,
    pub kappa: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<Vec<f64>>,
    pub reps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<CalibrationKind>,
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Parses `a,b,c;d,e,f` into one coordinate vector per component.
pub fn parse_components(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';').map(|c| c.split(',').map(parse_f64).collect()).collect()
}

pub fn to_shape(components: &[Vec<f64>]) -> Result<ProjectiveShape, CliError> {
    ProjectiveShape::from_vectors(components).map_err(|e| CliError::usage(e.to_string()))
}

impl Resolved {
    pub fn new(common: &CommonArgs, extra: &ExtraArgs, command: &str) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                eprintln!("note: config was written for `{c}`, running `{command}`");
            }
        }
        let frame_indices = match &common.frame {
            Some(f) => f.split(',').map(|x| x.trim().parse().map_err(|_| CliError::usage(format!("bad frame index {x:?}")))).collect::<Result<Vec<usize>, _>>()?,
            None => file.frame_indices.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
        };
        FrameSpec::from_one_based(&frame_indices).map_err(|e| CliError::usage(e.to_string()))?;
        let gap_tol = match (&common.gap_tol, &file.gap_tol) {
            (Some(t), _) => GapTolText::Text(t.clone()).parse()?,
            (None, Some(t)) => t.parse()?,
            (None, None) => GapTolerance::default(),
        };
        let alpha = common.alpha.or(file.alpha).unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::usage(format!("--alpha must lie in (0,1), got {alpha}")));
        }
        let null = match &extra.null {
            Some(t) => Some(parse_components(t)?),
            None => file.null.clone(),
        };
        let centers = if extra.center.is_empty() {
            file.centers.clone().unwrap_or_default()
        } else {
            extra.center.iter().map(|c| parse_components(c)).collect::<Result<_, _>>()?
        };
        let spread = match &extra.spread {
            Some(s) => Some(s.split(',').map(parse_f64).collect::<Result<_, _>>()?),
            None => file.spread.clone(),
        };
        Ok(Self {
            input: if common.input.is_empty() { file.input.clone() } else { common.input.clone() },
            group_column: common.groups.clone().or(file.group_column.clone()),
            frame_indices,
            alpha,
            resamples: common.boot.or(file.resamples).unwrap_or(0),
            seed: common.seed.or(file.seed).unwrap_or(0),
            df_mode: common.df_mode.or(file.df_mode).unwrap_or_default(),
            gap_tol,
            format: common.format.or(file.format).unwrap_or_default(),
            out: common.out.clone().or(file.out.clone()),
            null,
            pairwise: extra.pairwise || file.pairwise.unwrap_or(false),
            centering: extra.centering.or(file.centering).unwrap_or(CenteringArg::Recentred),
            centers,
            kappa: extra.kappa.or(file.kappa).unwrap_or(100.0),
            n: if extra.n.is_empty() { file.n.clone().unwrap_or_default() } else { extra.n.clone() },
            spread,
            reps: extra.reps.or(file.reps).unwrap_or(200),
            kind: extra.kind.or(file.kind),
        })
    }

    pub fn frame(&self) -> FrameSpec {
        FrameSpec::from_one_based(&self.frame_indices).expect("validated on construction")
    }
}
