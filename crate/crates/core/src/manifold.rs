//! Points of `RP^m` and `(RP^m)^q`, and the group structure of `RP^3`.
//!
//! A point of `RP^m` is a line through the origin of `R^{m+1}`; it is
//! stored as the unit vector on that line whose largest-magnitude entry is
//! positive (lowest index on ties). `RP^3` is identified with unit
//! quaternions `(w, x, y, z)` modulo sign, i.e. with `SO(3)`, which gives the
//! product, inverse, and log/exp charts used by the two-sample test.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::canonical_sign;
use crate::numerics::linalg::{dot, norm};

/// A point `[x]` of `RP^m` in canonical-sign unit representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProjectivePoint {
    coords: Vec<f64>,
}

impl ProjectivePoint {
    /// Canonical representative of the line through `v`.
    pub fn new(v: &[f64]) -> Result<Self> {
        canonicalize(v)
    }

    /// `[(1,0,0,0)]`, the identity of `RP^3`.
    pub fn identity() -> Self {
        Self { coords: vec![1.0, 0.0, 0.0, 0.0] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Projective dimension `m`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// The representative `±coords` with nonnegative inner product with `reference`.
    pub fn aligned_to(&self, reference: &[f64]) -> Vec<f64> {
        if dot(&self.coords, reference) < 0.0 {
            self.coords.iter().map(|x| -x).collect()
        } else {
            self.coords.clone()
        }
    }

    fn as_quat(&self) -> Result<[f64; 4]> {
        match self.coords.as_slice() {
            &[w, x, y, z] => Ok([w, x, y, z]),
            _ => Err(invalid(format!("quaternion operations need RP^3, got RP^{}", self.dim()))),
        }
    }
}

impl TryFrom<Vec<f64>> for ProjectivePoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        canonicalize(&v)
    }
}

impl From<ProjectivePoint> for Vec<f64> {
    fn from(p: ProjectivePoint) -> Self {
        p.coords
    }
}

/// `±v/‖v‖` with the canonical sign.
pub fn canonicalize(v: &[f64]) -> Result<ProjectivePoint> {
    if v.len() < 2 {
        return Err(invalid("a projective point needs at least two homogeneous coordinates"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite homogeneous coordinates"));
    }
    let n = norm(v);
    if n == 0.0 {
        return Err(invalid("the zero vector does not define a projective point"));
    }
    let mut coords: Vec<f64> = v.iter().map(|x| x / n).collect();
    canonical_sign(&mut coords);
    Ok(ProjectivePoint { coords })
}

/// A `q`-tuple of points of `RP^m` (all with the same `m`); for `m = 3` this
/// is a projective shape of a `(q+5)`-ad registered on a projective frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ProjectivePoint>", into = "Vec<ProjectivePoint>")]
pub struct ProjectiveShape {
    components: Vec<ProjectivePoint>,
}

impl ProjectiveShape {
    pub fn new(components: Vec<ProjectivePoint>) -> Result<Self> {
        let first = components.first().ok_or_else(|| invalid("a shape needs at least one component"))?;
        if components.iter().any(|c| c.dim() != first.dim()) {
            return Err(invalid("shape components must share the same projective dimension"));
        }
        Ok(Self { components })
    }

    /// Canonicalizes each row into one component.
    pub fn from_vectors(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| canonicalize(r)).collect::<Result<_>>()?)
    }

    /// `1_q`, the identity of `(RP^3)^q`.
    pub fn identity(q: usize) -> Self {
        Self { components: vec![ProjectivePoint::identity(); q.max(1)] }
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    /// Projective dimension shared by the components.
    pub fn m(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[ProjectivePoint] {
        &self.components
    }

    pub fn component(&self, s: usize) -> &ProjectivePoint {
        &self.components[s]
    }

    /// Total manifold dimension `q·m`.
    pub fn manifold_dim(&self) -> usize {
        self.q() * self.m()
    }
}

impl From<ProjectivePoint> for ProjectiveShape {
    fn from(p: ProjectivePoint) -> Self {
        Self { components: vec![p] }
    }
}

impl TryFrom<Vec<ProjectivePoint>> for ProjectiveShape {
    type Error = Error;
    fn try_from(v: Vec<ProjectivePoint>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProjectiveShape> for Vec<ProjectivePoint> {
    fn from(s: ProjectiveShape) -> Self {
        s.components
    }
}

/// A vector of tangential coordinates together with the shape at which they
/// were taken.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub entries: Vec<f64>,
    pub base: ProjectiveShape,
}

impl TangentVector {
    pub fn norm_sq(&self) -> f64 {
        dot(&self.entries, &self.entries)
    }
}

/// Checks that every sample member matches the first one's `q` and `m`.
pub(crate) fn check_uniform(sample: &[ProjectiveShape]) -> Result<(usize, usize)> {
    let first = sample.first().ok_or_else(|| invalid("sample is empty"))?;
    let (q, m) = (first.q(), first.m());
    for s in sample {
        if s.q() != q {
            return Err(Error::ShapeMismatch { expected: q, found: s.q() });
        }
        if s.m() != m {
            return Err(invalid("sample members have different projective dimensions"));
        }
    }
    Ok((q, m))
}

/// Hamilton product of raw quaternions `(w, x, y, z)`.
#[inline]
pub(crate) fn hamilton(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

#[inline]
pub(crate) fn conjugate(a: [f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// `[p ⊙ r]` on `RP^3`.
pub fn quat_mul(p: &ProjectivePoint, r: &ProjectivePoint) -> Result<ProjectivePoint> {
    canonicalize(&hamilton(p.as_quat()?, r.as_quat()?))
}

/// `[p]⁻¹ = [p̄]` on `RP^3`.
pub fn quat_inv(p: &ProjectivePoint) -> Result<ProjectivePoint> {
    canonicalize(&conjugate(p.as_quat()?))
}

/// Below this the scalar part is treated as zero (the chart's cut set).
const CUT_TOL: f64 = 1e-12;

/// Log chart of `RP^3 ≅ SO(3)` at the identity: the axis-angle vector
/// `θ·axis`, `θ = 2·arccos(w)` taken on the representative with `w > 0`.
///
/// Points with `w = 0` (half-turns) lie on the cut set and are rejected.
pub fn log_chart(p: &ProjectivePoint) -> Result<[f64; 3]> {
    let q = p.as_quat()?;
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    let w = sign * q[0];
    if w <= CUT_TOL {
        return Err(Error::ChartDomain(format!(
            "rotation by pi (scalar part {:.3e}) has no log-chart coordinates",
            q[0]
        )));
    }
    let v = [sign * q[1], sign * q[2], sign * q[3]];
    let vn = norm(&v);
    if vn == 0.0 {
        return Ok([0.0; 3]);
    }
    // 2·atan2(|v|, w) equals 2·arccos(w) for unit q and stays accurate near w = 1.
    let scale = 2.0 * vn.atan2(w) / vn;
    Ok([scale * v[0], scale * v[1], scale * v[2]])
}

/// Inverse of [`log_chart`] on the open ball `‖u‖ < π`.
pub fn exp_chart(u: [f64; 3]) -> Result<ProjectivePoint> {
    let theta = norm(&u);
    if !theta.is_finite() || theta >= std::f64::consts::PI {
        return Err(Error::ChartDomain(format!(
            "rotation angle {theta} is outside the chart ball of radius pi"
        )));
    }
    if theta == 0.0 {
        return Ok(ProjectivePoint::identity());
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let f = s / theta;
    canonicalize(&[c, f * u[0], f * u[1], f * u[2]])
}

/// Componentwise product on `(RP^3)^q`: component `s` is
/// `A_s⁻¹ ⊙ B_s` when `invert_first`, else `A_s ⊙ B_s`.
pub fn shape_group_op(a: &ProjectiveShape, b: &ProjectiveShape, invert_first: bool) -> Result<ProjectiveShape> {
    if a.q() != b.q() {
        return Err(Error::ShapeMismatch { expected: a.q(), found: b.q() });
    }
    let comps = a
        .components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| {
            let left = if invert_first { quat_inv(x)? } else { x.clone() };
            quat_mul(&left, y)
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectiveShape::new(comps)
}

/// Concatenated log-chart coordinates of every component.
pub fn log_chart_shape(s: &ProjectiveShape) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * s.q());
    for c in s.components() {
        out.extend_from_slice(&log_chart(c)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn random_vec(rng: &mut crate::numerics::StreamRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.standard_normal()).collect()
    }

    fn random_point(rng: &mut crate::numerics::StreamRng, n: usize) -> ProjectivePoint {
        canonicalize(&random_vec(rng, n)).unwrap()
    }

    fn close(a: &ProjectivePoint, b: &ProjectivePoint, tol: f64) -> bool {
        a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[0.0, -2.0]).unwrap().coords(), &[0.0, 1.0]);
        let p = canonicalize(&[0.6, 0.8]).unwrap();
        assert!((p.coords()[0] - 0.6).abs() < 1e-15 && (p.coords()[1] - 0.8).abs() < 1e-15);
        assert!(canonicalize(&[0.0, 0.0, 0.0]).is_err());
        assert!(canonicalize(&[1.0]).is_err());
    }

    #[test]
    fn canonicalize_ignores_sign() {
        let mut rng = RngStream::new(1, 0).generator();
        for _ in 0..100 {
            let v = random_vec(&mut rng, 4);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            assert_eq!(canonicalize(&v).unwrap(), canonicalize(&neg).unwrap());
        }
    }

    #[test]
    fn quaternion_table_and_group_laws() {
        let i = canonicalize(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        let j = canonicalize(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(quat_mul(&i, &j).unwrap().coords(), &[0.0, 0.0, 0.0, 1.0]);
        let one = ProjectivePoint::identity();
        assert_eq!(quat_inv(&one).unwrap(), one);

        let mut rng = RngStream::new(2, 0).generator();
        for _ in 0..100 {
            let x = random_point(&mut rng, 4);
            let y = random_point(&mut rng, 4);
            let z = random_point(&mut rng, 4);
            assert!(close(&quat_mul(&one, &x).unwrap(), &x, 1e-12));
            assert!(close(&quat_mul(&x, &quat_inv(&x).unwrap()).unwrap(), &one, 1e-12));
            assert!(close(&quat_mul(&quat_inv(&x).unwrap(), &x).unwrap(), &one, 1e-12));
            assert!(close(&quat_inv(&quat_inv(&x).unwrap()).unwrap(), &x, 1e-12));
            let left = quat_mul(&quat_mul(&x, &y).unwrap(), &z).unwrap();
            let right = quat_mul(&x, &quat_mul(&y, &z).unwrap()).unwrap();
            assert!(close(&left, &right, 1e-12));
        }
    }

    #[test]
    fn group_ops_need_rp3() {
        let p = canonicalize(&[1.0, 2.0, 3.0]).unwrap();
        assert!(quat_mul(&p, &p).is_err());
        assert!(quat_inv(&p).is_err());
        assert!(log_chart(&p).is_err());
    }

    #[test]
    fn log_exp_round_trip() {
        assert_eq!(log_chart(&ProjectivePoint::identity()).unwrap(), [0.0; 3]);
        let mut rng = RngStream::new(3, 0).generator();
        for _ in 0..100 {
            let mut u = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
            let n = norm(&u);
            let target = (rng.index(1000) as f64 / 1000.0) * (std::f64::consts::PI - 0.1);
            u.iter_mut().for_each(|x| *x *= target / n);
            let back = log_chart(&exp_chart(u).unwrap()).unwrap();
            for k in 0..3 {
                assert!((back[k] - u[k]).abs() < 1e-10);
            }
        }
        assert!(exp_chart([std::f64::consts::PI, 0.0, 0.0]).is_err());
    }

    #[test]
    fn exp_matches_axis_angle_rotation() {
        // Oracle: the rotation matrix of the quaternion must equal the
        // Rodrigues rotation about x by 0.5 rad.
        let p = exp_chart([0.5, 0.0, 0.0]).unwrap();
        let want = [0.25f64.cos(), 0.25f64.sin(), 0.0, 0.0];
        for k in 0..4 {
            assert!((p.coords()[k] - want[k]).abs() < 1e-15);
        }
        let [w, x, y, z] = p.as_quat().unwrap();
        let r = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        let (s, c) = 0.5f64.sin_cos();
        let rodrigues = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - rodrigues[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cut_set_is_an_error() {
        let half_turn = canonicalize(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(log_chart(&half_turn), Err(Error::ChartDomain(_))));
    }

    #[test]
    fn log_of_inverse_is_negated() {
        let p = exp_chart([0.3, -0.2, 0.9]).unwrap();
        let a = log_chart(&p).unwrap();
        let b = log_chart(&quat_inv(&p).unwrap()).unwrap();
        for k in 0..3 {
            assert!((a[k] + b[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_group_op_laws() {
        let mut rng = RngStream::new(4, 0).generator();
        let shape = |rng: &mut crate::numerics::StreamRng| {
            ProjectiveShape::new((0..3).map(|_| random_point(rng, 4)).collect()).unwrap()
        };
        let a = shape(&mut rng);
        let id = shape_group_op(&a, &a, true).unwrap();
        for c in id.components() {
            assert!(close(c, &ProjectivePoint::identity(), 1e-12));
        }
        for _ in 0..50 {
            let (x, y, z) = (shape(&mut rng), shape(&mut rng), shape(&mut rng));
            let l = shape_group_op(&shape_group_op(&x, &y, false).unwrap(), &z, false).unwrap();
            let r = shape_group_op(&x, &shape_group_op(&y, &z, false).unwrap(), false).unwrap();
            for (p, q) in l.components().iter().zip(r.components()) {
                assert!(close(p, q, 1e-12));
            }
        }
        // q = 1 reduces to the point operations
        let p = ProjectiveShape::from(random_point(&mut rng, 4));
        let r = ProjectiveShape::from(random_point(&mut rng, 4));
        let got = shape_group_op(&p, &r, true).unwrap();
        let want = quat_mul(&quat_inv(p.component(0)).unwrap(), r.component(0)).unwrap();
        assert_eq!(got.component(0), &want);
        let short = ProjectiveShape::identity(2);
        assert!(matches!(shape_group_op(&a, &short, true), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn sign_class_soundness() {
        let mut rng = RngStream::new(5, 0).generator();
        for _ in 0..50 {
            let v = random_vec(&mut rng, 4);
            let w = random_vec(&mut rng, 4);
            let neg = |x: &[f64]| x.iter().map(|t| -t).collect::<Vec<_>>();
            let (p, pn) = (canonicalize(&v).unwrap(), canonicalize(&neg(&v)).unwrap());
            let (r, rn) = (canonicalize(&w).unwrap(), canonicalize(&neg(&w)).unwrap());
            assert_eq!(quat_mul(&p, &r).unwrap(), quat_mul(&pn, &rn).unwrap());
            assert_eq!(quat_inv(&p).unwrap(), quat_inv(&pn).unwrap());
            if let (Ok(a), Ok(b)) = (log_chart(&p), log_chart(&pn)) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn shape_validation() {
        assert!(ProjectiveShape::new(vec![]).is_err());
        let a = canonicalize(&[1.0, 0.0]).unwrap();
        let b = canonicalize(&[1.0, 0.0, 0.0]).unwrap();
        assert!(ProjectiveShape::new(vec![a, b]).is_err());
    }

    #[test]
    fn serde_round_trip_canonicalizes() {
        let s: ProjectiveShape = serde_json::from_str("[[0.0,-2.0,0.0,0.0],[1.0,0.0,0.0,0.0]]").unwrap();
        assert_eq!(s.component(0).coords(), &[0.0, 1.0, 0.0, 0.0]);
        let text = serde_json::to_string(&s).unwrap();
        let back: ProjectiveShape = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
