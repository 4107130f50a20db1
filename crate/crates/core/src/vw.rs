//! Veronese–Whitney embedding `j([x]) = x xᵀ`, chord distance, and the
//! farthest projection onto the embedded manifold.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::manifold::{canonicalize, check_uniform, ProjectivePoint, ProjectiveShape};
use crate::numerics::{eigh_sym, EigenDecomp, SymMatrix};

/// Tolerance on the gap between the two smallest eigenvalues of a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum GapTolerance {
    /// Multiple of the block trace.
    Relative(f64),
    Absolute(f64),
}

impl Default for GapTolerance {
    fn default() -> Self {
        GapTolerance::Relative(1e-9)
    }
}

impl GapTolerance {
    /// The absolute threshold for a block with the given trace.
    pub fn threshold(&self, trace: f64) -> f64 {
        match *self {
            GapTolerance::Relative(r) => r * trace.abs(),
            GapTolerance::Absolute(a) => a,
        }
    }

    /// Fails with [`Error::FocalPoint`] unless `values[1] - values[0]`
    /// exceeds the threshold.
    pub fn check(&self, block: usize, values: &[f64], trace: f64) -> Result<()> {
        let gap = values[1] - values[0];
        let tolerance = self.threshold(trace);
        if gap > tolerance {
            Ok(())
        } else {
            Err(Error::FocalPoint { block, gap, tolerance })
        }
    }
}

/// `j_q` of a shape: one rank-one projector per component.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    blocks: Vec<SymMatrix>,
}

impl EmbeddedPoint {
    pub fn blocks(&self) -> &[SymMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<SymMatrix> {
        self.blocks
    }
}

pub fn vw_embed(p: &ProjectivePoint) -> EmbeddedPoint {
    EmbeddedPoint { blocks: vec![SymMatrix::outer(p.coords())] }
}

pub fn vw_embed_shape(s: &ProjectiveShape) -> EmbeddedPoint {
    EmbeddedPoint { blocks: s.components().iter().map(|c| SymMatrix::outer(c.coords())).collect() }
}

/// `Σ_s tr((A_s − B_s)²)`, the squared Frobenius distance summed over blocks.
pub fn chord_dist_sq(a: &[SymMatrix], b: &[SymMatrix]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("block counts differ: {} vs {}", a.len(), b.len())));
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.dim() != y.dim() {
            return Err(invalid(format!("block sizes differ: {} vs {}", x.dim(), y.dim())));
        }
        total += x.as_matrix().data().iter().zip(y.as_matrix().data()).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    }
    Ok(total)
}

/// Empirical Fréchet function `(1/n) Σ_i d₀(j(p), j(x_i))`.
///
/// Uses `d₀(j[x], j[y]) = 2 − 2 (x·y)²` for unit representatives.
pub fn frechet_value(p: &ProjectiveShape, sample: &[ProjectiveShape]) -> Result<f64> {
    if sample.is_empty() {
        return Err(invalid("Fréchet function of an empty sample"));
    }
    let (q, m) = check_uniform(sample)?;
    if p.q() != q || p.m() != m {
        return Err(Error::ShapeMismatch { expected: q, found: p.q() });
    }
    let total: f64 = sample
        .iter()
        .map(|x| {
            p.components()
                .iter()
                .zip(x.components())
                .map(|(a, b)| {
                    let c = crate::numerics::linalg::dot(a.coords(), b.coords());
                    2.0 - 2.0 * c * c
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / sample.len() as f64)
}

/// Farthest projection of a block matrix onto `j(RP^m)`: the line of the
/// eigenvector belonging to the smallest eigenvalue.
pub fn farthest_project_block(mu: &SymMatrix, block: usize, gap: GapTolerance) -> Result<(ProjectivePoint, EigenDecomp)> {
    if mu.dim() < 2 {
        return Err(invalid("blocks must be at least 2x2"));
    }
    let eig = eigh_sym(mu)?;
    gap.check(block, eig.values(), mu.trace())?;
    Ok((canonicalize(&eig.vector(0))?, eig))
}

/// Blockwise farthest projection onto `j_q((RP^m)^q)`.
pub fn farthest_project(mu: &[SymMatrix], gap: GapTolerance) -> Result<ProjectiveShape> {
    if mu.is_empty() {
        return Err(invalid("no blocks to project"));
    }
    let comps = mu
        .iter()
        .enumerate()
        .map(|(s, b)| farthest_project_block(b, s, gap).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    ProjectiveShape::new(comps)
}
