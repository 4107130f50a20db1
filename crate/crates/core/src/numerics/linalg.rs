//! Small dense matrices and a cyclic Jacobi eigensolver for symmetric ones.
//!
//! Everything here is sized for the axial blocks of projective shape data
//! (at most a few dozen rows), so clarity wins over blocking or SIMD.

use crate::error::{invalid, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(invalid("columns have different lengths"));
        }
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                m.data[i * cols + j] = x;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// # Panics
    /// If the inner dimensions differ.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn lu(&self) -> Result<(Matrix, Vec<usize>, f64)> {
        if self.rows != self.cols {
            return Err(invalid("LU factorization needs a square matrix"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a.get(i, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 {
                return Ok((a, perm, 0.0));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let akk = a.get(k, k);
            for i in k + 1..n {
                let f = a.get(i, k) / akk;
                a.set(i, k, f);
                for j in k + 1..n {
                    let v = a.get(i, j) - f * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        Ok((a, perm, sign))
    }

    pub fn determinant(&self) -> Result<f64> {
        let (lu, _, sign) = self.lu()?;
        if sign == 0.0 {
            return Ok(0.0);
        }
        Ok((0..self.rows).map(|i| lu.get(i, i)).product::<f64>() * sign)
    }

    /// Solves `A x = b` by partial-pivoting LU.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        if b.len() != n {
            return Err(invalid("right-hand side has the wrong length"));
        }
        let (lu, perm, sign) = self.lu()?;
        if sign == 0.0 {
            return Err(invalid("matrix is singular"));
        }
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= lu.get(i, k) * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= lu.get(i, k) * y[k];
            }
            y[i] /= lu.get(i, i);
        }
        Ok(y)
    }
}

/// A real symmetric matrix.
///
/// Construction validates symmetry to `1e-12 · max(1, |a_ij|)` and rejects
/// non-finite entries; internal builders mirror the upper triangle so the
/// stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("symmetric matrix must have dimension >= 1"));
        }
        Self::from_matrix(Matrix::from_row_major(n, n, data)?)
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.rows != m.cols || m.rows == 0 {
            return Err(invalid("symmetric matrix must be square and non-empty"));
        }
        if m.data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let n = m.rows;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(invalid(format!(
                        "matrix is not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Averages `m` with its transpose. For accumulations that are symmetric
    /// up to rounding.
    pub(crate) fn symmetrized(mut m: Matrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        Self(m)
    }

    /// `x xᵀ`.
    pub fn outer(x: &[f64]) -> Self {
        let n = x.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = x[i] * x[j];
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Self(m)
    }

    /// Gram matrix `(1/count) Σ w wᵀ` of equal-length vectors.
    pub fn gram<'a>(vectors: impl IntoIterator<Item = &'a [f64]>, dim: usize, count: f64) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for w in vectors {
            for i in 0..dim {
                let wi = w[i];
                if wi == 0.0 {
                    continue;
                }
                for j in i..dim {
                    m.data[i * dim + j] += wi * w[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v = m.get(i, j) / count;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Self(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, w: f64) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.data.iter_mut().zip(&other.0.data) {
            *a += w * b;
        }
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        let mut out = self.clone();
        out.0.data.iter_mut().for_each(|x| *x *= c);
        out
    }

    /// `T A Tᵀ` for a (not necessarily square) `T`.
    pub fn congruence(&self, t: &Matrix) -> SymMatrix {
        Self::symmetrized(t.matmul(&self.0).matmul(&t.transpose()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.0.mul_vec(v)
    }

    /// `vᵀ A⁻¹ v` through the eigendecomposition.
    ///
    /// Fails with [`Error::SingularCovariance`] unless every eigenvalue
    /// exceeds `1e-10` times the largest one.
    pub fn inverse_quadratic_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(invalid("vector length does not match matrix dimension"));
        }
        let eig = eigh_sym(self)?;
        let (min, max) = (eig.values[0], *eig.values.last().unwrap());
        if !(max > 0.0) || min <= 1e-10 * max {
            return Err(Error::SingularCovariance { min, max });
        }
        Ok((0..self.dim())
            .map(|k| {
                let c: f64 = (0..self.dim()).map(|i| eig.vectors.get(i, k) * v[i]).sum();
                c * c / eig.values[k]
            })
            .sum())
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
///
/// Each eigenvector is stored as a column and carries the canonical sign:
/// its largest-magnitude component is positive, ties going to the lowest
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    values: Vec<f64>,
    vectors: Matrix,
}

impl EigenDecomp {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Flips `v` in place so its largest-magnitude entry is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius mass drops below
/// `1e-12 · ‖A‖_F`, at most 100 sweeps. Output is a pure function of the
/// input bits.
pub fn eigh_sym(a: &SymMatrix) -> Result<EigenDecomp> {
    let n = a.dim();
    if a.0.data.iter().any(|x| !x.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let mut m = a.0.clone();
    let mut v = Matrix::identity(n);
    let norm = m.frobenius_norm();
    let threshold = 1e-12 * norm;

    let off_diagonal = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * m.get(i, j) * m.get(i, j);
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged || off_diagonal(&m) < threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J acting on rows/cols p and q.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged && off_diagonal(&m) >= threshold {
        return Err(Error::NoConvergence(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let columns: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut col = v.column(k);
            canonical_sign(&mut col);
            col
        })
        .collect();
    Ok(EigenDecomp { values, vectors: Matrix::from_columns(&columns)? })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// An orthonormal basis of the complement of the unit vector `u`, as the
/// columns of a `len × (len-1)` matrix (Householder reflection of the
/// coordinate axes).
pub fn orthonormal_complement(u: &[f64]) -> Matrix {
    let n = u.len();
    // Reflect e_k onto u, where k is u's largest-magnitude coordinate, so the
    // reflector is well conditioned.
    let k = (0..n).fold(0, |b, i| if u[i].abs() > u[b].abs() { i } else { b });
    let s = if u[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut w: Vec<f64> = u.iter().map(|x| s * x).collect();
    w[k] -= 1.0;
    let ww = dot(&w, &w);
    let columns: Vec<Vec<f64>> = (0..n)
        .filter(|&j| j != k)
        .map(|j| {
            // H e_j = e_j - 2 w (w_j) / ww
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            if ww > 0.0 {
                let f = 2.0 * w[j] / ww;
                col.iter_mut().zip(&w).for_each(|(c, wi)| *c -= f * wi);
            }
            col
        })
        .collect();
    Matrix::from_columns(&columns).expect("columns share a length")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn random_sym(n: usize, seed: &mut u64) -> SymMatrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = lcg(seed);
                m.set(i, j, x);
                m.set(j, i, x);
            }
        }
        SymMatrix::from_matrix(m).unwrap()
    }

    /// Characteristic-polynomial oracle: det(A - λI) by LU, roots bracketed
    /// on a fine grid over the Gershgorin interval and refined by bisection.
    fn char_poly_roots(a: &SymMatrix) -> Vec<f64> {
        let n = a.dim();
        let p = |lam: f64| {
            let mut m = a.as_matrix().clone();
            for i in 0..n {
                m.set(i, i, m.get(i, i) - lam);
            }
            m.determinant().unwrap()
        };
        let r = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_x = -r;
        let mut prev = p(prev_x);
        for s in 1..=steps {
            let x = -r + 2.0 * r * s as f64 / steps as f64;
            let cur = p(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != cur.signum() && cur != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p(mid).signum() == p(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = cur;
        }
        roots
    }

    #[test]
    fn diagonal_matrix_sorts_and_pairs_vectors() {
        let eig = eigh_sym(&SymMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(eig.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(eig.vector(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(eig.vector(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_is_left_alone() {
        let eig = eigh_sym(&SymMatrix::identity(4)).unwrap();
        assert_eq!(eig.values(), &[1.0; 4]);
        assert_eq!(eig.vectors(), &Matrix::identity(4));
    }

    #[test]
    fn random_4x4_matches_characteristic_polynomial() {
        let mut seed = 17;
        for _ in 0..10 {
            let a = random_sym(4, &mut seed);
            let roots = char_poly_roots(&a);
            assert_eq!(roots.len(), 4);
            let eig = eigh_sym(&a).unwrap();
            for (l, r) in eig.values().iter().zip(&roots) {
                assert!((l - r).abs() < 1e-8, "{l} vs {r}");
            }
        }
    }

    #[test]
    fn decomposition_invariants_hold() {
        let mut seed = 99;
        for n in 1..=8 {
            let a = random_sym(n, &mut seed);
            let eig = eigh_sym(&a).unwrap();
            let v = eig.vectors();
            let gram = v.transpose().matmul(v);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram.get(i, j) - want).abs() < 1e-9);
                }
            }
            let fro = a.frobenius_norm();
            for k in 0..n {
                let vk = eig.vector(k);
                let av = a.mul_vec(&vk);
                let res: f64 = av
                    .iter()
                    .zip(&vk)
                    .map(|(x, y)| (x - eig.values()[k] * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-8 * fro.max(1e-300));
                let big = vk.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
                assert!(big > 0.0);
            }
            assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
            // reconstruction
            let lam = SymMatrix::diag(eig.values());
            let rec = lam.congruence(v);
            let mut diff = 0.0;
            for i in 0..n {
                for j in 0..n {
                    diff += (rec.get(i, j) - a.get(i, j)).powi(2);
                }
            }
            assert!(diff.sqrt() <= 1e-8 * fro);
        }
    }

    #[test]
    fn spectrum_is_orthogonally_invariant() {
        let mut seed = 5;
        for _ in 0..10 {
            let a = random_sym(4, &mut seed);
            let q = eigh_sym(&random_sym(4, &mut seed)).unwrap().vectors().clone();
            let b = a.congruence(&q);
            let ea = eigh_sym(&a).unwrap();
            let eb = eigh_sym(&b).unwrap();
            for (x, y) in ea.values().iter().zip(eb.values()) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SymMatrix::new(2, vec![1.0, 2.0, 2.1, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![f64::NAN, 0.0, 0.0, 1.0]).is_err());
        assert!(SymMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn eigh_is_deterministic() {
        let mut seed = 3;
        let a = random_sym(6, &mut seed);
        assert_eq!(eigh_sym(&a).unwrap(), eigh_sym(&a).unwrap());
    }

    #[test]
    fn inverse_quadratic_form_matches_solve() {
        let a = SymMatrix::new(3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let v = [1.0, -2.0, 0.5];
        let x = a.as_matrix().solve(&v).unwrap();
        let direct = dot(&v, &x);
        assert!((a.inverse_quadratic_form(&v).unwrap() - direct).abs() < 1e-12);
        let singular = SymMatrix::diag(&[1.0, 0.0]);
        assert!(matches!(
            singular.inverse_quadratic_form(&[1.0, 1.0]),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn complement_is_orthonormal() {
        let mut seed = 11;
        for n in 2..6 {
            let mut u: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
            let nu = norm(&u);
            u.iter_mut().for_each(|x| *x /= nu);
            let c = orthonormal_complement(&u);
            let g = c.transpose().matmul(&c);
            for i in 0..n - 1 {
                assert!(dot(&c.column(i), &u).abs() < 1e-14);
                for j in 0..n - 1 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.get(i, j) - want).abs() < 1e-14);
                }
            }
        }
    }
}
