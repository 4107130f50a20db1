//! Sample and pooled VW antimeans, anticovariance matrices, and tangential
//! coordinates.
//!
//! For one axial block with second-moment matrix `J = (1/n) Σ x xᵀ`,
//! eigenvalues `d(1) < d(2) ≤ …` and eigenvectors `g(1), g(2), …`, the
//! sample antimean is `[g(1)]` and a first-order perturbation gives
//!
//! ```text
//! ĝ(1) − g(1) ≈ (1/n) Σ_i w_i,   w_i = Σ_{a≥2} g(a) (g(a)·x_i)(g(1)·x_i) / (d(1) − d(a)).
//! ```
//!
//! The anticovariance matrix is the Gram matrix of these influence vectors
//! expressed in a tangent frame. In the eigenvector frame `D = (g(2) … )`
//! its entries are exactly
//! `n⁻¹ (d_s(1)−d_s(a))⁻¹ (d_t(1)−d_t(b))⁻¹ Σ_i (g_s(a)·x^s)(g_t(b)·x^t)(g_s(1)·x^s)(g_t(1)·x^t)`.
//! Keeping the influence vectors in ambient coordinates lets a bootstrap
//! replicate's anticovariance be expressed in the original sample's frame.

use crate::error::{invalid, Error, Result};
use crate::manifold::{canonicalize, check_uniform, ProjectiveShape, TangentVector};
use crate::numerics::linalg::{dot, orthonormal_complement, Matrix};
use crate::numerics::{eigh_sym, EigenDecomp, SymMatrix};
use crate::vw::GapTolerance;

/// Second-moment matrix of one axial component with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialBlock {
    pub moment: SymMatrix,
    pub eigen: EigenDecomp,
}

impl AxialBlock {
    fn new(moment: SymMatrix) -> Result<Self> {
        let eigen = eigh_sym(&moment)?;
        Ok(Self { moment, eigen })
    }

    /// `d(1..m+1)`, ascending.
    pub fn values(&self) -> &[f64] {
        self.eigen.values()
    }

    /// `g(k)`, zero-based.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigen.vector(k)
    }
}

/// The per-component matrices `J_s` and their eigensystems.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialEigensystem {
    blocks: Vec<AxialBlock>,
}

impl AxialEigensystem {
    /// Weighted sum `Σ_a w_a J^a_s` of several eigensystems, re-decomposed.
    pub fn weighted_sum(systems: &[&AxialEigensystem], weights: &[f64]) -> Result<Self> {
        let first = systems.first().ok_or_else(|| invalid("nothing to pool"))?;
        let q = first.q();
        let mut blocks = Vec::with_capacity(q);
        for s in 0..q {
            let mut acc = SymMatrix::zeros(first.blocks[s].moment.dim());
            for (sys, &w) in systems.iter().zip(weights) {
                if sys.q() != q {
                    return Err(Error::ShapeMismatch { expected: q, found: sys.q() });
                }
                if sys.blocks[s].moment.dim() != acc.dim() {
                    return Err(invalid("pooled groups have different projective dimensions"));
                }
                acc.add_scaled(&sys.blocks[s].moment, w);
            }
            blocks.push(AxialBlock::new(acc)?);
        }
        Ok(Self { blocks })
    }

    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[AxialBlock] {
        &self.blocks
    }

    pub fn block(&self, s: usize) -> &AxialBlock {
        &self.blocks[s]
    }

    /// The two smallest eigenvalues of every block.
    pub fn gap_diagnostics(&self) -> Vec<(f64, f64)> {
        self.blocks.iter().map(|b| (b.values()[0], b.values()[1])).collect()
    }

    /// Fails with [`Error::FocalPoint`] on the first block whose smallest
    /// eigenvalue is not separated from the next by more than `gap`.
    pub fn check_nonfocal(&self, gap: GapTolerance) -> Result<()> {
        for (s, b) in self.blocks.iter().enumerate() {
            gap.check(s, b.values(), b.moment.trace())?;
        }
        Ok(())
    }

    /// `([g_1(1)], …, [g_q(1)])`.
    pub fn antimean(&self, gap: GapTolerance) -> Result<ProjectiveShape> {
        self.check_nonfocal(gap)?;
        ProjectiveShape::new(self.blocks.iter().map(|b| canonicalize(&b.vector(0))).collect::<Result<_>>()?)
    }

    /// Per-observation influence vectors, one ambient vector per block.
    pub fn influence_vectors(&self, sample: &[ProjectiveShape]) -> Result<Vec<Vec<Vec<f64>>>> {
        let (q, _) = check_uniform(sample)?;
        if q != self.q() {
            return Err(Error::ShapeMismatch { expected: self.q(), found: q });
        }
        let prepared: Vec<(Vec<Vec<f64>>, Vec<f64>)> = self
            .blocks
            .iter()
            .map(|b| {
                let dim = b.values().len();
                let vecs = (0..dim).map(|k| b.vector(k)).collect();
                let inv_gaps = (1..dim).map(|a| 1.0 / (b.values()[0] - b.values()[a])).collect();
                (vecs, inv_gaps)
            })
            .collect();
        Ok(sample
            .iter()
            .map(|shape| {
                shape
                    .components()
                    .iter()
                    .zip(&prepared)
                    .map(|(x, (g, inv_gaps))| {
                        let x = x.coords();
                        let c1 = dot(&g[0], x);
                        let mut w = vec![0.0; x.len()];
                        for (a, inv) in inv_gaps.iter().enumerate() {
                            let f = dot(&g[a + 1], x) * c1 * inv;
                            w.iter_mut().zip(&g[a + 1]).for_each(|(wi, gi)| *wi += f * gi);
                        }
                        w
                    })
                    .collect()
            })
            .collect())
    }
}

/// Builds the per-component second-moment matrices and their eigensystems.
pub fn axial_moments(sample: &[ProjectiveShape]) -> Result<AxialEigensystem> {
    let (q, m) = check_uniform(sample)?;
    let n = sample.len() as f64;
    let blocks = (0..q)
        .map(|s| AxialBlock::new(SymMatrix::gram(sample.iter().map(|x| x.component(s).coords()), m + 1, n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AxialEigensystem { blocks })
}

/// A base shape together with an orthonormal basis `D_s` of each
/// component's tangent space (columns orthogonal to the base representative).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    base: ProjectiveShape,
    bases: Vec<Matrix>,
}

impl TangentFrame {
    /// The eigenvector frame `D_s = (g_s(2) … g_s(m+1))`.
    pub fn from_eigensystem(axial: &AxialEigensystem, gap: GapTolerance) -> Result<Self> {
        let base = axial.antimean(gap)?;
        Ok(Self { base, bases: tangent_basis(axial) })
    }

    /// A Householder frame at an arbitrary base shape.
    pub fn at(base: &ProjectiveShape) -> Self {
        let bases = base.components().iter().map(|c| orthonormal_complement(c.coords())).collect();
        Self { base: base.clone(), bases }
    }

    pub fn base(&self) -> &ProjectiveShape {
        &self.base
    }

    pub fn bases(&self) -> &[Matrix] {
        &self.bases
    }

    /// Total tangent dimension `q·m`.
    pub fn dim(&self) -> usize {
        self.bases.iter().map(|d| d.cols()).sum()
    }

    /// `D_sᵀ x̃_s` per block, where `x̃_s` is the representative of the
    /// target's component `s` with nonnegative inner product with the base.
    pub fn coords(&self, target: &ProjectiveShape) -> Result<TangentVector> {
        if target.q() != self.base.q() || target.m() != self.base.m() {
            return Err(Error::ShapeMismatch { expected: self.base.q(), found: target.q() });
        }
        let mut entries = Vec::with_capacity(self.dim());
        for ((t, b), d) in target.components().iter().zip(self.base.components()).zip(&self.bases) {
            entries.extend(d.tr_mul_vec(&t.aligned_to(b.coords())));
        }
        Ok(TangentVector { entries, base: self.base.clone() })
    }

    /// Anticovariance of the estimator built from `axial` on `sample`,
    /// expressed in this frame. Each block's influence vectors are first
    /// sign-aligned so that `axial`'s `g_s(1)` agrees with this frame's base.
    pub fn anticovariance(&self, axial: &AxialEigensystem, sample: &[ProjectiveShape]) -> Result<SymMatrix> {
        if axial.q() != self.base.q() {
            return Err(Error::ShapeMismatch { expected: self.base.q(), found: axial.q() });
        }
        let signs: Vec<f64> = axial
            .blocks()
            .iter()
            .zip(self.base.components())
            .map(|(b, p)| if dot(&b.vector(0), p.coords()) < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let influence = axial.influence_vectors(sample)?;
        let coords: Vec<Vec<f64>> = influence
            .iter()
            .map(|per_block| {
                let mut c = Vec::with_capacity(self.dim());
                for ((w, d), sign) in per_block.iter().zip(&self.bases).zip(&signs) {
                    c.extend(d.tr_mul_vec(w).into_iter().map(|x| x * sign));
                }
                c
            })
            .collect();
        Ok(SymMatrix::gram(coords.iter().map(|c| c.as_slice()), self.dim(), sample.len() as f64))
    }
}

/// `D_s = (g_s(2) … g_s(m+1))` for every block.
pub fn tangent_basis(axial: &AxialEigensystem) -> Vec<Matrix> {
    axial
        .blocks()
        .iter()
        .map(|b| {
            let cols: Vec<Vec<f64>> = (1..b.values().len()).map(|k| b.vector(k)).collect();
            Matrix::from_columns(&cols).expect("eigenvectors share a length")
        })
        .collect()
}

/// The anticovariance matrix in the eigenvector frame of `axial`.
pub fn anticovariance_vw(sample: &[ProjectiveShape], axial: &AxialEigensystem, gap: GapTolerance) -> Result<SymMatrix> {
    TangentFrame::from_eigensystem(axial, gap)?.anticovariance(axial, sample)
}

/// A sample VW antimean with everything the tests need.
#[derive(Debug, Clone, PartialEq)]
pub struct AntimeanEstimate {
    pub antimean: ProjectiveShape,
    pub axial: AxialEigensystem,
    pub frame: TangentFrame,
    pub anticov: SymMatrix,
    pub n: usize,
}

impl AntimeanEstimate {
    pub fn tangent_basis(&self) -> &[Matrix] {
        self.frame.bases()
    }
}

pub fn sample_antimean(sample: &[ProjectiveShape], gap: GapTolerance) -> Result<AntimeanEstimate> {
    let axial = axial_moments(sample)?;
    let frame = TangentFrame::from_eigensystem(&axial, gap)?;
    let anticov = frame.anticovariance(&axial, sample)?;
    Ok(AntimeanEstimate { antimean: frame.base().clone(), axial, frame, anticov, n: sample.len() })
}

/// Tangential coordinates of `target` in the estimate's frame.
pub fn tangent_coords(est: &AntimeanEstimate, target: &ProjectiveShape) -> Result<TangentVector> {
    est.frame.coords(target)
}

/// The pooled antimean of several groups.
///
/// Its eigensystem belongs to the pooled second-moment matrix
/// `J^{(p)}_s = Σ_a (n_a/n) J^a_s`; the smallest eigenvector of that matrix is
/// the farthest projection of the pooled embedded sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledAntimean {
    pub antimean: ProjectiveShape,
    pub weights: Vec<f64>,
    pub axial: AxialEigensystem,
    pub frame: TangentFrame,
}

pub fn pooled_antimean(estimates: &[AntimeanEstimate], sizes: &[usize], gap: GapTolerance) -> Result<PooledAntimean> {
    if estimates.is_empty() {
        return Err(invalid("no groups to pool"));
    }
    if estimates.len() != sizes.len() {
        return Err(invalid(format!("{} estimates but {} group sizes", estimates.len(), sizes.len())));
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(invalid("group sizes must be positive"));
    }
    let total: usize = sizes.iter().sum();
    let weights: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    let systems: Vec<&AxialEigensystem> = estimates.iter().map(|e| &e.axial).collect();
    let axial = AxialEigensystem::weighted_sum(&systems, &weights)?;
    let frame = TangentFrame::from_eigensystem(&axial, gap)?;
    Ok(PooledAntimean { antimean: frame.base().clone(), weights, axial, frame })
}
