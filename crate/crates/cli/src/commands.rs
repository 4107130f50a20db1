//! One function per subcommand. Each returns the `result` part of a report.

use antimean::bootstrap::{bootstrap_manova, bootstrap_one_sample, bootstrap_two_sample, BootstrapPlan, BootstrapResult};
use antimean::calibrate::{
    bootstrap_coverage, manova_bootstrap_rate, manova_null, one_sample_size, two_sample_bootstrap_rate, CalibrationSummary,
};
use antimean::data::{
    group_configs, load_landmarks, projective_coordinates, synth_sample, true_antimean, write_landmarks, write_landmarks_to, LandmarkConfig, LandmarkFormat,
    SynthSpec,
};
use antimean::estimation::{sample_antimean, AntimeanEstimate, AxialEigensystem};
use antimean::inference::{manova_statistic, one_sample_test, pairwise_manova, two_sample_test, ManovaBase, PairwiseCalibration, TestResult};
use antimean::manifold::ProjectiveShape;
use antimean::numerics::{chisq_quantile, chisq_sf, RngStream, SymMatrix};
use antimean::vw::GapTolerance;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{to_shape, CalibrationKind, DfArg, Resolved};
use crate::CliError;

type Out = Result<Value, CliError>;

struct Group {
    label: String,
    configs: Vec<LandmarkConfig>,
    shapes: Vec<ProjectiveShape>,
}

/// Loads every input. With a group column the groups come from its labels;
/// otherwise each file is one group named after the file.
fn load_groups(cfg: &Resolved) -> Result<Vec<Group>, CliError> {
    if cfg.input.is_empty() {
        return Err(CliError::usage("no --input given"));
    }
    let mut labelled = Vec::new();
    for path in &cfg.input {
        if !path.exists() {
            return Err(CliError::io(format!("{}: no such file", path.display())));
        }
        let mut configs = load_landmarks(path, LandmarkFormat::from_path(path), cfg.group_column.as_deref())?;
        if cfg.group_column.is_none() {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            configs.iter_mut().for_each(|c| c.group = Some(stem.clone()));
        }
        labelled.extend(configs);
    }
    let frame = cfg.frame();
    group_configs(&labelled)
        .into_iter()
        .map(|(label, configs)| {
            let shapes = configs.iter().map(|c| projective_coordinates(c, &frame)).collect::<Result<Vec<_>, _>>()?;
            Ok(Group { label, configs, shapes })
        })
        .collect()
}

fn need_groups(groups: &[Group], want: &str, ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("this command needs {want}, the input resolves to {} group(s)", groups.len())))
    }
}

#[derive(Serialize)]
struct GapDiagnostic {
    block: usize,
    smallest: f64,
    second: f64,
    gap: f64,
    threshold: f64,
}

fn gap_diagnostics(axial: &AxialEigensystem, tol: GapTolerance) -> Vec<GapDiagnostic> {
    axial
        .gap_diagnostics()
        .into_iter()
        .zip(axial.blocks())
        .enumerate()
        .map(|(block, ((d1, d2), b))| GapDiagnostic {
            block,
            smallest: d1,
            second: d2,
            gap: d2 - d1,
            threshold: tol.threshold(b.values().iter().sum()),
        })
        .collect()
}

fn components(shape: &ProjectiveShape) -> Vec<Vec<f64>> {
    shape.components().iter().map(|c| c.coords().to_vec()).collect()
}

fn matrix(m: &SymMatrix) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect()).collect()
}

fn estimate(shapes: &[ProjectiveShape], tol: GapTolerance) -> Result<AntimeanEstimate, CliError> {
    Ok(sample_antimean(shapes, tol)?)
}

fn boot_json(r: &BootstrapResult, alpha: f64, df: u32) -> Result<Value, CliError> {
    let observed = r.observed.expect("tests always have an observed statistic");
    let t = TestResult::bootstrap(observed, df, alpha, r.cutoff, r.empirical_p.expect("observed implies p"))?;
    Ok(json!({
        "resamples_used": r.values.len(),
        "resamples_failed": r.n_failed,
        "cutoff": t.cutoff,
        "p_value": t.p_value,
        "reject": t.reject,
    }))
}

fn plan(cfg: &Resolved) -> BootstrapPlan {
    BootstrapPlan::new(cfg.resamples, cfg.seed)
}

pub fn antimean(cfg: &Resolved) -> Out {
    let groups = load_groups(cfg)?;
    need_groups(&groups, "exactly one group", groups.len() == 1)?;
    let g = &groups[0];
    let est = estimate(&g.shapes, cfg.gap_tol)?;
    Ok(json!({
        "group": g.label,
        "n": est.n,
        "q": est.antimean.q(),
        "antimean": components(&est.antimean),
        "eigenvalues": est.axial.blocks().iter().map(|b| b.values().to_vec()).collect::<Vec<_>>(),
        "anticovariance": matrix(&est.anticov),
        "gap_diagnostics": gap_diagnostics(&est.axial, cfg.gap_tol),
    }))
}

pub fn coords(cfg: &Resolved) -> Out {
    let groups = load_groups(cfg)?;
    let rows: Vec<Value> = groups
        .iter()
        .flat_map(|g| {
            g.configs.iter().zip(&g.shapes).map(move |(c, s)| json!({ "config_id": c.config_id, "group": g.label, "coords": components(s) }))
        })
        .collect();
    Ok(json!({ "configs": rows }))
}

pub fn test1(cfg: &Resolved) -> Out {
    let groups = load_groups(cfg)?;
    need_groups(&groups, "exactly one group", groups.len() == 1)?;
    let null = to_shape(cfg.null.as_deref().ok_or_else(|| CliError::usage("test1 needs --null"))?)?;
    let shapes = &groups[0].shapes;
    let est = estimate(shapes, cfg.gap_tol)?;
    let asym = one_sample_test(&est, &null, cfg.alpha)?;
    let bootstrap = if cfg.resamples > 0 {
        let r = bootstrap_one_sample(shapes, Some(&null), &plan(cfg), 1.0 - cfg.alpha, cfg.gap_tol)?;
        boot_json(&r, cfg.alpha, asym.df)?
    } else {
        Value::Null
    };
    Ok(json!({
        "n": est.n,
        "null": components(&null),
        "antimean": components(&est.antimean),
        "statistic": asym.statistic,
        "df": asym.df,
        "asymptotic": asym,
        "bootstrap": bootstrap,
        "gap_diagnostics": gap_diagnostics(&est.axial, cfg.gap_tol),
    }))
}

pub fn test2(cfg: &Resolved) -> Out {
    let groups = load_groups(cfg)?;
    need_groups(&groups, "exactly two groups", groups.len() == 2)?;
    let e1 = estimate(&groups[0].shapes, cfg.gap_tol)?;
    let e2 = estimate(&groups[1].shapes, cfg.gap_tol)?;
    let asym = two_sample_test(&e1, &e2, cfg.alpha)?;
    let bootstrap = if cfg.resamples > 0 {
        let r = bootstrap_two_sample(&groups[0].shapes, &groups[1].shapes, &plan(cfg), 1.0 - cfg.alpha, cfg.gap_tol)?;
        boot_json(&r, cfg.alpha, asym.df)?
    } else {
        Value::Null
    };
    let per_group: Vec<Value> = groups
        .iter()
        .zip([&e1, &e2])
        .map(|(g, e)| json!({ "label": g.label, "n": e.n, "antimean": components(&e.antimean), "gap_diagnostics": gap_diagnostics(&e.axial, cfg.gap_tol) }))
        .collect();
    Ok(json!({
        "groups": per_group,
        "statistic": asym.statistic,
        "df": asym.df,
        "asymptotic": asym,
        "bootstrap": bootstrap,
    }))
}

pub fn manova(cfg: &Resolved) -> Out {
    let groups = load_groups(cfg)?;
    need_groups(&groups, "at least two groups", groups.len() >= 2)?;
    let samples: Vec<Vec<ProjectiveShape>> = groups.iter().map(|g| g.shapes.clone()).collect();
    let stat = manova_statistic(&samples, &ManovaBase::PooledSample, cfg.gap_tol)?;
    let (d, g) = (stat.pooled.frame.dim(), samples.len());
    let df = cfg.df_mode.mode().df(d, g);
    let asym = TestResult::asymptotic(stat.statistic, df, cfg.alpha)?;
    let alternatives = DfArg::all()
        .iter()
        .map(|m| {
            let df = m.mode().df(d, g);
            Ok(json!({ "df_mode": m.label(), "df": df, "cutoff": chisq_quantile(1.0 - cfg.alpha, df)?, "p_value": chisq_sf(stat.statistic.max(0.0), df)? }))
        })
        .collect::<Result<Vec<_>, antimean::Error>>()?;
    let bootstrap = if cfg.resamples > 0 {
        let r = bootstrap_manova(&samples, &plan(cfg), 1.0 - cfg.alpha, cfg.centering.centering(), cfg.gap_tol)?;
        boot_json(&r, cfg.alpha, df)?
    } else {
        Value::Null
    };
    let pairwise = if cfg.pairwise {
        let calibration = if cfg.resamples > 0 { PairwiseCalibration::Bootstrap(plan(cfg)) } else { PairwiseCalibration::Asymptotic };
        let rows: Vec<Value> = pairwise_manova(&samples, cfg.alpha, &calibration, cfg.gap_tol)?
            .into_iter()
            .map(|e| {
                let pair = [e.first + 1, e.second + 1];
                let labels = [&groups[e.first].label, &groups[e.second].label];
                match e.result {
                    Ok(t) => json!({
                        "pair": pair, "labels": labels, "decision": if t.reject { "Reject" } else { "No" },
                        "statistic": t.statistic, "p_value": t.p_value, "cutoff": t.cutoff, "error": null,
                    }),
                    Err(msg) => json!({
                        "pair": pair, "labels": labels, "decision": "Error",
                        "statistic": null, "p_value": null, "cutoff": null, "error": msg,
                    }),
                }
            })
            .collect();
        Value::Array(rows)
    } else {
        Value::Null
    };
    let per_group: Vec<Value> = groups
        .iter()
        .zip(&stat.estimates)
        .zip(&stat.contributions)
        .map(|((g, e), c)| {
            json!({
                "label": g.label, "n": e.n, "antimean": components(&e.antimean), "contribution": c,
                "gap_diagnostics": gap_diagnostics(&e.axial, cfg.gap_tol),
            })
        })
        .collect();
    Ok(json!({
        "groups": per_group,
        "pooled": { "antimean": components(&stat.pooled.antimean), "gap_diagnostics": gap_diagnostics(&stat.pooled.axial, cfg.gap_tol) },
        "statistic": stat.statistic,
        "df_mode": cfg.df_mode.label(),
        "df": df,
        "asymptotic": asym,
        "alternative_df": alternatives,
        "bootstrap": bootstrap,
        "pairwise": pairwise,
    }))
}

/// One synthetic spec per `--center`, with group `a` seeded from
/// `RngStream::new(seed, 0).derive(a)`.
fn synth_specs(cfg: &Resolved) -> Result<Vec<SynthSpec>, CliError> {
    if cfg.centers.is_empty() {
        return Err(CliError::usage("needs at least one --center"));
    }
    let sizes = match cfg.n.len() {
        0 => vec![50; cfg.centers.len()],
        1 => vec![cfg.n[0]; cfg.centers.len()],
        k if k == cfg.centers.len() => cfg.n.clone(),
        k => return Err(CliError::usage(format!("{k} sample sizes for {} centers", cfg.centers.len()))),
    };
    let root = RngStream::new(cfg.seed, 0);
    cfg.centers
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(a, (c, n))| {
            let center = to_shape(c)?;
            if center.m() != 3 {
                return Err(CliError::usage("synthetic centers must have four coordinates per component"));
            }
            let spec = SynthSpec { spread: cfg.spread.clone(), ..SynthSpec::new(center, cfg.kappa, n, root.derive(a as u64).seed) };
            true_antimean(&spec)?;
            Ok(spec)
        })
        .collect()
}

/// Landmarks in the standard frame followed by one landmark per component,
/// so registering with frame `1,2,3,4,5` returns the shape itself.
fn as_landmarks(id: String, group: Option<String>, shape: &ProjectiveShape) -> LandmarkConfig {
    let mut landmarks = vec![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [1.0, 1.0, 1.0, 1.0]];
    landmarks.extend(shape.components().iter().map(|c| {
        let x = c.coords();
        [x[0], x[1], x[2], x[3]]
    }));
    LandmarkConfig { config_id: id, group, landmarks }
}

pub fn synth(cfg: &Resolved) -> Out {
    let specs = synth_specs(cfg)?;
    let mut configs = Vec::new();
    let mut summary = Vec::new();
    for (a, spec) in specs.iter().enumerate() {
        let label = format!("g{}", a + 1);
        for (i, s) in synth_sample(spec)?.iter().enumerate() {
            configs.push(as_landmarks(format!("{label}-{}", i + 1), Some(label.clone()), s));
        }
        summary.push(json!({
            "label": label, "n": spec.n, "seed": spec.seed,
            "center": components(&spec.center), "true_antimean": components(&true_antimean(spec)?),
        }));
    }
    match &cfg.out {
        Some(path) => {
            write_landmarks(path, &configs, LandmarkFormat::from_path(path))?;
            Ok(json!({ "written": path, "configs": configs.len(), "groups": summary }))
        }
        None => {
            write_landmarks_to(std::io::stdout().lock(), &configs, LandmarkFormat::Csv)?;
            Ok(Value::Null)
        }
    }
}

fn summary_json(s: &CalibrationSummary) -> Value {
    json!({
        "event": s.event, "reps": s.reps, "completed": s.statistics.len(), "failures": s.failures,
        "successes": s.successes, "rate": s.rate, "standard_error": s.standard_error,
        "statistic_quantiles": { "q50": s.quantile(0.5), "q90": s.quantile(0.9), "q95": s.quantile(0.95) },
    })
}

pub fn calibrate(cfg: &Resolved) -> Out {
    let kind = cfg.kind.ok_or_else(|| CliError::usage("calibrate needs --kind"))?;
    let specs = synth_specs(cfg)?;
    let boot = || if cfg.resamples > 0 { Ok(cfg.resamples) } else { Err(CliError::usage("this calibration needs --boot B > 0")) };
    let (reps, seed, tol, alpha) = (cfg.reps, cfg.seed, cfg.gap_tol, cfg.alpha);
    let s = match kind {
        CalibrationKind::Size => one_sample_size(&specs[0], reps, alpha, seed, tol)?,
        CalibrationKind::Coverage => bootstrap_coverage(&specs[0], boot()?, reps, 1.0 - alpha, seed, tol)?,
        CalibrationKind::TwoSample => {
            if specs.len() != 2 {
                return Err(CliError::usage("two-sample calibration needs exactly two --center values"));
            }
            two_sample_bootstrap_rate(&specs[0], &specs[1], boot()?, reps, alpha, seed, tol)?
        }
        CalibrationKind::ManovaNull => {
            let q = specs[0].center.q();
            let df = cfg.df_mode.mode().df(3 * q, specs.len());
            manova_null(&specs, reps, chisq_quantile(1.0 - alpha, df)?, seed, tol)?
        }
        CalibrationKind::ManovaBoot => manova_bootstrap_rate(&specs, boot()?, reps, alpha, cfg.centering.centering(), seed, tol)?,
    };
    Ok(summary_json(&s))
}
