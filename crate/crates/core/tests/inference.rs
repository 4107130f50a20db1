use antimean::bootstrap::{bootstrap_manova, bootstrap_one_sample, bootstrap_two_sample, BootstrapPlan, Centering};
use antimean::data::{synth_sample, true_antimean, SynthSpec};
use antimean::estimation::sample_antimean;
use antimean::inference::{
    manova_statistic, manova_test, one_sample_statistic, pairwise_manova, two_sample_statistic, DfMode, ManovaBase, PairwiseCalibration,
};
use antimean::manifold::{quat_mul, ProjectivePoint, ProjectiveShape};
use antimean::vw::GapTolerance;

fn spec(center: [f64; 4], n: usize, seed: u64) -> SynthSpec {
    let c = ProjectiveShape::from_vectors(&[center.to_vec()]).unwrap();
    SynthSpec { spread: Some(vec![1.0, 1.0, 3.0, 5.0]), ..SynthSpec::new(c, 100.0, n, seed) }
}

fn turn(deg: f64) -> [f64; 4] {
    let t = deg.to_radians();
    [t.cos(), 0.0, 0.0, t.sin()]
}

const GAP: GapTolerance = GapTolerance::Relative(1e-9);

#[test]
fn one_sample_statistic_is_smallest_at_the_estimate() {
    let s = spec([1.0, 0.0, 0.0, 0.0], 80, 1);
    let est = sample_antimean(&synth_sample(&s).unwrap(), GAP).unwrap();
    assert!(one_sample_statistic(&est, &est.antimean).unwrap() < 1e-20);
    let truth = true_antimean(&s).unwrap();
    assert!(one_sample_statistic(&est, &truth).unwrap() > 0.0);
}

#[test]
fn two_sample_statistic_is_left_invariant() {
    let a = sample_antimean(&synth_sample(&spec([1.0, 0.0, 0.0, 0.0], 50, 2)).unwrap(), GAP).unwrap();
    let b = sample_antimean(&synth_sample(&spec(turn(10.0), 50, 3)).unwrap(), GAP).unwrap();
    let t = two_sample_statistic(&a, &b).unwrap().statistic;
    // moving both samples by one group element leaves ȳ2⁻¹ȳ1 unchanged
    let g = ProjectivePoint::new(&[0.4, -0.7, 0.2, 0.5]).unwrap();
    let move_all = |seed, c| -> Vec<ProjectiveShape> {
        synth_sample(&spec(c, 50, seed))
            .unwrap()
            .iter()
            .map(|x| ProjectiveShape::from(quat_mul(&g, x.component(0)).unwrap()))
            .collect()
    };
    let a2 = sample_antimean(&move_all(2, [1.0, 0.0, 0.0, 0.0]), GAP).unwrap();
    let b2 = sample_antimean(&move_all(3, turn(10.0)), GAP).unwrap();
    let t2 = two_sample_statistic(&a2, &b2).unwrap().statistic;
    assert!((t - t2).abs() < 1e-6 * t, "{t} vs {t2}");
}

#[test]
fn manova_separates_distinct_groups() {
    let groups: Vec<Vec<ProjectiveShape>> =
        [0.0, 30.0, 60.0].iter().enumerate().map(|(a, &d)| synth_sample(&spec(turn(d), 40, 10 + a as u64)).unwrap()).collect();
    let r = manova_test(&groups, 0.05, DfMode::default(), &ManovaBase::PooledSample, GAP).unwrap();
    assert!(r.reject && r.p_value < 1e-3, "{r:?}");
    let table = pairwise_manova(&groups, 0.05, &PairwiseCalibration::Asymptotic, GAP).unwrap();
    assert_eq!(table.len(), 3);
    assert!(table.iter().all(|e| e.reject() == Some(true)));
}

#[test]
fn one_group_gives_zero_statistic() {
    let g = vec![synth_sample(&spec([1.0, 0.0, 0.0, 0.0], 30, 4)).unwrap()];
    let t = manova_statistic(&g, &ManovaBase::PooledSample, GAP).unwrap();
    assert!(t.statistic.abs() < 1e-18);
}

#[test]
fn external_base_at_the_pooled_antimean_matches_pooled_base() {
    let groups: Vec<Vec<ProjectiveShape>> = (0..3).map(|a| synth_sample(&spec(turn(5.0 * a as f64), 40, 20 + a)).unwrap()).collect();
    let pooled = manova_statistic(&groups, &ManovaBase::PooledSample, GAP).unwrap();
    let ext = manova_statistic(&groups, &ManovaBase::External(pooled.pooled.antimean.clone()), GAP).unwrap();
    assert!((pooled.statistic - ext.statistic).abs() < 1e-9 * pooled.statistic.max(1.0));
}

#[test]
fn bootstrap_runs_are_deterministic() {
    let a = synth_sample(&spec([1.0, 0.0, 0.0, 0.0], 30, 5)).unwrap();
    let b = synth_sample(&spec(turn(20.0), 30, 6)).unwrap();
    let plan = BootstrapPlan::new(100, 42);
    let r1 = bootstrap_two_sample(&a, &b, &plan, 0.95, GAP).unwrap();
    let r2 = bootstrap_two_sample(&a, &b, &plan, 0.95, GAP).unwrap();
    assert_eq!(r1, r2);
    let other = bootstrap_two_sample(&a, &b, &BootstrapPlan::new(100, 43), 0.95, GAP).unwrap();
    assert_ne!(r1.values, other.values);
}

#[test]
fn recentred_bootstrap_rejects_a_shifted_group() {
    let groups: Vec<Vec<ProjectiveShape>> =
        [0.0, 20.0, 0.0].iter().enumerate().map(|(a, &d)| synth_sample(&spec(turn(d), 150, 30 + a as u64)).unwrap()).collect();
    let r = bootstrap_manova(&groups, &BootstrapPlan::new(199, 7), 0.95, Centering::Recentred, GAP).unwrap();
    assert!(r.observed.unwrap() > r.cutoff && r.empirical_p.unwrap() < 0.05, "{r:?}");
}

#[test]
fn one_sample_bootstrap_without_null_has_no_p_value() {
    let s = synth_sample(&spec([1.0, 0.0, 0.0, 0.0], 40, 8)).unwrap();
    let r = bootstrap_one_sample(&s, None, &BootstrapPlan::new(50, 1), 0.9, GAP).unwrap();
    assert!(r.observed.is_none() && r.empirical_p.is_none());
    assert_eq!(r.values.len() + r.n_failed, 50);
    assert!(r.cutoff > 0.0);
}
