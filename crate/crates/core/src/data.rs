//! Landmark files, projective-frame registration, and synthetic samples.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::manifold::{canonicalize, hamilton, ProjectivePoint, ProjectiveShape};
use crate::numerics::linalg::{norm, orthonormal_complement, Matrix};
use crate::numerics::RngStream;

/// One landmark configuration in homogeneous coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct LandmarkConfig {
    pub config_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub landmarks: Vec<[f64; 4]>,
}

#[derive(Deserialize)]
struct RawConfig {
    config_id: String,
    #[serde(default)]
    group: Option<String>,
    landmarks: Vec<Vec<f64>>,
}

impl TryFrom<RawConfig> for LandmarkConfig {
    type Error = Error;
    fn try_from(raw: RawConfig) -> Result<Self> {
        let landmarks = raw
            .landmarks
            .iter()
            .map(|l| homogenize(l))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Schema(format!("config {}: {e}", raw.config_id)))?;
        Ok(Self { config_id: raw.config_id, group: raw.group, landmarks })
    }
}

fn homogenize(v: &[f64]) -> Result<[f64; 4]> {
    let h = match *v {
        [x, y, z] => [x, y, z, 1.0],
        [x, y, z, w] => [x, y, z, w],
        _ => return Err(invalid(format!("a landmark needs 3 or 4 coordinates, got {}", v.len()))),
    };
    if h.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite landmark coordinate"));
    }
    if h.iter().all(|&x| x == 0.0) {
        return Err(invalid("zero landmark vector"));
    }
    Ok(h)
}

impl LandmarkConfig {
    pub fn k(&self) -> usize {
        self.landmarks.len()
    }
}

/// Five distinct landmark indices (0-based) forming the projective frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub indices: [usize; 5],
}

impl FrameSpec {
    pub fn new(indices: [usize; 5]) -> Result<Self> {
        for i in 0..5 {
            for j in i + 1..5 {
                if indices[i] == indices[j] {
                    return Err(Error::FrameDegenerate(format!("frame index {} repeated", indices[i])));
                }
            }
        }
        Ok(Self { indices })
    }

    /// Parses a 1-based list such as `1,2,3,4,5`.
    pub fn parse_one_based(text: &str) -> Result<Self> {
        let idx: Vec<usize> = text
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| invalid(format!("bad frame index {t:?}"))))
            .collect::<Result<_>>()?;
        Self::from_one_based(&idx)
    }

    pub fn from_one_based(idx: &[usize]) -> Result<Self> {
        if idx.len() != 5 || idx.contains(&0) {
            return Err(invalid("a frame needs five 1-based landmark indices"));
        }
        Self::new([idx[0] - 1, idx[1] - 1, idx[2] - 1, idx[3] - 1, idx[4] - 1])
    }
}

/// Relative threshold on `|det|` of four unit-normalized frame vectors.
const GENERAL_POSITION_TOL: f64 = 1e-10;

/// Registers a configuration on a projective frame.
///
/// With frame vectors `u_1..u_5`, solves `Σ λ_i u_i = u_5`, forms
/// `B = (λ_1 u_1 … λ_4 u_4)` and maps each remaining landmark `x` to
/// `[B⁻¹ x]`. `B⁻¹` sends the frame to the standard frame
/// `([e_1], …, [e_4], [e_1+e_2+e_3+e_4])`, so the output is invariant under
/// every projective transformation of the configuration.
pub fn projective_coordinates(config: &LandmarkConfig, frame: &FrameSpec) -> Result<ProjectiveShape> {
    let k = config.k();
    if k < 6 {
        return Err(invalid(format!("config {}: need at least 6 landmarks, got {k}", config.config_id)));
    }
    if let Some(&bad) = frame.indices.iter().find(|&&i| i >= k) {
        return Err(Error::FrameDegenerate(format!("frame index {} out of range for k = {k}", bad + 1)));
    }
    let unit: Vec<Vec<f64>> = frame
        .indices
        .iter()
        .map(|&i| {
            let v = config.landmarks[i];
            let n = norm(&v);
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    for skip in 0..5 {
        let cols: Vec<Vec<f64>> = (0..5).filter(|&i| i != skip).map(|i| unit[i].clone()).collect();
        let det = Matrix::from_columns(&cols)?.determinant()?;
        if det.abs() <= GENERAL_POSITION_TOL {
            return Err(Error::FrameDegenerate(format!(
                "config {}: frame landmarks are not in general position (|det| = {:.3e} without frame point {})",
                config.config_id,
                det.abs(),
                skip + 1
            )));
        }
    }
    let u = Matrix::from_columns(&unit[..4])?;
    let lambda = u.solve(&unit[4])?;
    if lambda.iter().any(|l| l.abs() <= GENERAL_POSITION_TOL) {
        return Err(Error::FrameDegenerate(format!("config {}: a frame coefficient vanishes", config.config_id)));
    }
    let scaled: Vec<Vec<f64>> = unit[..4].iter().zip(&lambda).map(|(c, l)| c.iter().map(|x| x * l).collect()).collect();
    let b = Matrix::from_columns(&scaled)?;
    let comps = (0..k)
        .filter(|i| !frame.indices.contains(i))
        .map(|i| {
            let y = b.solve(&config.landmarks[i])?;
            canonicalize(&y).map_err(|_| invalid(format!("config {}: landmark {} maps to zero", config.config_id, i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectiveShape::new(comps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkFormat {
    Csv,
    Json,
}

impl LandmarkFormat {
    /// `.json` means JSON; everything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => LandmarkFormat::Json,
            _ => LandmarkFormat::Csv,
        }
    }
}

/// Reads landmark configurations.
///
/// CSV files have the header `config_id,landmark_id,x,y,z[,w]` plus, when
/// `group_column` names one, a group label column. Rows of one config keep
/// their file order; configs appear in order of first occurrence.
pub fn load_landmarks(path: &Path, format: LandmarkFormat, group_column: Option<&str>) -> Result<Vec<LandmarkConfig>> {
    let configs = match format {
        LandmarkFormat::Json => {
            let text = std::fs::read_to_string(path)?;
            if text.trim().is_empty() {
                return Ok(Vec::new());
            }
            serde_json::from_str::<Vec<LandmarkConfig>>(&text).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            })?
        }
        LandmarkFormat::Csv => read_csv(BufReader::new(File::open(path)?), group_column)?,
    };
    check_groups(&configs)?;
    Ok(configs)
}

fn read_csv<R: std::io::Read>(reader: R, group_column: Option<&str>) -> Result<Vec<LandmarkConfig>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(Error::Parse { line: 1, message: e.to_string() }),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Error::Schema(format!("CSV header lacks column {name:?}")));
    let (ci, li, xi, yi, zi) = (need("config_id")?, need("landmark_id")?, need("x")?, need("y")?, need("z")?);
    let wi = col("w");
    let gi = group_column.map(need).transpose()?;

    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, LandmarkConfig> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| Error::Parse { line, message: format!("not a number: {:?}", &rec[i]) })
        };
        let mut coords = vec![num(xi)?, num(yi)?, num(zi)?];
        if let Some(wi) = wi {
            if !rec[wi].is_empty() {
                coords.push(num(wi)?);
            }
        }
        if rec[li].is_empty() {
            return Err(Error::Parse { line, message: "empty landmark_id".into() });
        }
        let landmark = homogenize(&coords).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let id = rec[ci].to_string();
        let group = gi.map(|g| rec[g].to_string());
        let entry = by_id.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            LandmarkConfig { config_id: id.clone(), group: group.clone(), landmarks: Vec::new() }
        });
        if entry.group != group {
            return Err(Error::Parse { line, message: format!("config {id} has more than one group label") });
        }
        entry.landmarks.push(landmark);
    }
    Ok(order.into_iter().map(|id| by_id.remove(&id).expect("inserted above")).collect())
}

/// Every config must have at least 6 landmarks, and all configs sharing a
/// group label the same number.
fn check_groups(configs: &[LandmarkConfig]) -> Result<()> {
    let mut k_of: HashMap<Option<&str>, (usize, &str)> = HashMap::new();
    for c in configs {
        if c.k() < 6 {
            return Err(Error::Schema(format!("config {} has {} landmarks; at least 6 are needed", c.config_id, c.k())));
        }
        let (k, first) = *k_of.entry(c.group.as_deref()).or_insert((c.k(), &c.config_id));
        if k != c.k() {
            return Err(Error::Schema(format!(
                "config {} has {} landmarks but config {first} in the same group has {k}",
                c.config_id,
                c.k()
            )));
        }
    }
    Ok(())
}

/// Writes configurations in the format [`load_landmarks`] reads. CSV output
/// uses shortest round-trip float formatting and includes a `group` column
/// when any config has a group.
pub fn write_landmarks(path: &Path, configs: &[LandmarkConfig], format: LandmarkFormat) -> Result<()> {
    write_landmarks_to(BufWriter::new(File::create(path)?), configs, format)
}

/// [`write_landmarks`] to any writer.
pub fn write_landmarks_to<W: Write>(mut out: W, configs: &[LandmarkConfig], format: LandmarkFormat) -> Result<()> {
    match format {
        LandmarkFormat::Json => {
            serde_json::to_writer_pretty(&mut out, configs).map_err(std::io::Error::from)?;
        }
        LandmarkFormat::Csv => {
            let grouped = configs.iter().any(|c| c.group.is_some());
            write!(out, "config_id,landmark_id,x,y,z,w")?;
            if grouped {
                write!(out, ",group")?;
            }
            writeln!(out)?;
            for c in configs {
                for (i, l) in c.landmarks.iter().enumerate() {
                    write!(out, "{},{},{:?},{:?},{:?},{:?}", c.config_id, i + 1, l[0], l[1], l[2], l[3])?;
                    if grouped {
                        write!(out, ",{}", c.group.as_deref().unwrap_or(""))?;
                    }
                    writeln!(out)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Splits configurations by group label, in order of first appearance.
pub fn group_configs(configs: &[LandmarkConfig]) -> Vec<(String, Vec<LandmarkConfig>)> {
    let mut out: Vec<(String, Vec<LandmarkConfig>)> = Vec::new();
    for c in configs {
        let label = c.group.clone().unwrap_or_default();
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(c.clone()),
            None => out.push((label, vec![c.clone()])),
        }
    }
    out
}

/// Specification of a synthetic sample on `(RP^m)^q`.
///
/// Component `s` of each observation is `[c + κ_s^{-1/2} Σ_k spread_k z_k e_k]`
/// with `z` standard normal and `(e_0 = c, e_1, …, e_m)` an orthonormal frame
/// at the center representative `c`. On `RP^3` the frame is
/// `(c, c⊙i, c⊙j, c⊙k)`, elsewhere a Householder complement of `c`.
///
/// The law is invariant under each reflection `e_k ↦ −e_k`, so `E[xxᵀ]` is
/// diagonal in that frame; with `spread_1 < spread_k` for `k ≥ 2` the smallest
/// eigenvalue belongs to `e_1`, which is therefore the antimean. The default
/// spread `(1, 1, 2, …, m)` keeps every eigenvalue simple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub center: ProjectiveShape,
    /// One value for all components, or one per component.
    pub concentration: Vec<f64>,
    #[serde(default)]
    pub spread: Option<Vec<f64>>,
    pub n: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(center: ProjectiveShape, concentration: f64, n: usize, seed: u64) -> Self {
        Self { center, concentration: vec![concentration], spread: None, n, seed }
    }

    fn validate(&self) -> Result<()> {
        let q = self.center.q();
        if !(self.concentration.len() == 1 || self.concentration.len() == q) {
            return Err(invalid(format!("need 1 or {q} concentrations, got {}", self.concentration.len())));
        }
        if self.concentration.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(invalid("concentrations must be finite and positive"));
        }
        let spread = self.spread();
        if spread.len() != self.center.m() + 1 || spread.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid(format!("spread needs {} nonnegative entries", self.center.m() + 1)));
        }
        Ok(())
    }

    pub fn spread(&self) -> Vec<f64> {
        self.spread.clone().unwrap_or_else(|| {
            let m = self.center.m();
            std::iter::once(1.0).chain((1..=m).map(|k| k as f64)).collect()
        })
    }

    fn kappa(&self, s: usize) -> f64 {
        if self.concentration.len() == 1 {
            self.concentration[0]
        } else {
            self.concentration[s]
        }
    }
}

/// The frame `(e_0, …, e_m)` at a component, as columns.
fn synth_frame(c: &ProjectivePoint) -> Vec<Vec<f64>> {
    let v = c.coords();
    if let &[w, x, y, z] = v {
        let q = [w, x, y, z];
        let units = [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        std::iter::once(v.to_vec()).chain(units.iter().map(|u| hamilton(q, *u).to_vec())).collect()
    } else {
        let d = orthonormal_complement(v);
        std::iter::once(v.to_vec()).chain((0..d.cols()).map(|k| d.column(k))).collect()
    }
}

/// Draws `spec.n` observations; observation `i` uses `RngStream::new(seed, i)`.
pub fn synth_sample(spec: &SynthSpec) -> Result<Vec<ProjectiveShape>> {
    spec.validate()?;
    let spread = spec.spread();
    let frames: Vec<Vec<Vec<f64>>> = spec.center.components().iter().map(synth_frame).collect();
    (0..spec.n)
        .map(|i| {
            let mut rng = RngStream::new(spec.seed, i as u64).generator();
            let comps = frames
                .iter()
                .enumerate()
                .map(|(s, frame)| {
                    let scale = spec.kappa(s).powf(-0.5);
                    let mut x = frame[0].clone();
                    for (e, sp) in frame.iter().zip(&spread) {
                        let f = scale * sp * rng.standard_normal();
                        x.iter_mut().zip(e).for_each(|(xi, ei)| *xi += f * ei);
                    }
                    canonicalize(&x)
                })
                .collect::<Result<Vec<_>>>()?;
            ProjectiveShape::new(comps)
        })
        .collect()
}

/// The population antimean of [`synth_sample`]'s law: `[e_1]` per component.
pub fn true_antimean(spec: &SynthSpec) -> Result<ProjectiveShape> {
    spec.validate()?;
    ProjectiveShape::new(spec.center.components().iter().map(|c| canonicalize(&synth_frame(c)[1])).collect::<Result<_>>()?)
}
