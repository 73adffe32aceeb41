//! Deterministic small-dense linear algebra: row-major matrices, LU
//! determinants, Cholesky, one-sided Jacobi singular values, rotation
//! charts on SO(n), and subset determinant expansions.
//!
//! Everything here targets desk-scale dimensions (n up to ~8); stability is
//! preferred over speed throughout.

mod rotation;
mod subsets;

pub use rotation::{
    assemble_spd, rotation_defect, rotation_matrix, skew_from_params, skew_param_len,
    RotationParams,
};
pub use subsets::{binomial, cauchy_binet_det, subsets_lex, SubsetExpansion, MAX_SUBSET_GROUND};

use crate::scalar::{real, Real};
use thiserror::Error;

/// Errors from kernel-level operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LinalgError {
    /// Rows of a matrix literal had different lengths.
    #[error("matrix rows must all have the same length")]
    RaggedRows,
    /// A matrix with zero rows or zero columns was supplied.
    #[error("matrix must have at least one row and one column")]
    Empty,
    /// Subset expansion needs at least `n` columns.
    #[error("subset expansion needs at least {n} columns, got {k}")]
    TooFewColumns { k: usize, n: usize },
    /// Subset enumeration over this many columns is refused outright.
    #[error("subset enumeration over {k} columns exceeds the supported maximum of {max}")]
    TooManyColumns { k: usize, max: usize },
    /// A spectral assembly was given a non-positive eigenvalue.
    #[error("eigenvalues must be strictly positive")]
    NonPositiveEigenvalue,
    /// Incompatible dimensions for the requested operation.
    #[error("dimension mismatch: {0}")]
    Dim(String),
}

/// Dense row-major matrix over the working scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row vectors; all rows must have equal, nonzero length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LinalgError::Empty);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::RaggedRows);
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds an `n x k` matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<T>]) -> Result<Self, LinalgError> {
        if cols.is_empty() || cols[0].is_empty() {
            return Err(LinalgError::Empty);
        }
        let n = cols[0].len();
        if cols.iter().any(|c| c.len() != n) {
            return Err(LinalgError::RaggedRows);
        }
        Ok(Mat::from_fn(n, cols.len(), |r, c| cols[c][r]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vec(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] = out[(r, c)] + a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        self.sub(other).max_abs()
    }

    pub fn is_symmetric_within(&self, tol: T) -> bool {
        self.is_square() && self.max_abs_diff(&self.transpose()) <= tol
    }

    pub fn has_finite_entries(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Row vectors as owned `Vec`s, for serialization and reporting.
    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Determinant by LU with partial pivoting.
pub fn det<T: Real>(m: &Mat<T>) -> T {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.clone();
    let mut sign = T::one();
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if a[(r, k)].abs() > a[(piv, k)].abs() {
                piv = r;
            }
        }
        if a[(piv, k)] == T::zero() {
            return T::zero();
        }
        if piv != k {
            for c in 0..n {
                let tmp = a[(k, c)];
                a[(k, c)] = a[(piv, c)];
                a[(piv, c)] = tmp;
            }
            sign = -sign;
        }
        for r in k + 1..n {
            let f = a[(r, k)] / a[(k, k)];
            for c in k..n {
                a[(r, c)] = a[(r, c)] - f * a[(k, c)];
            }
        }
    }
    let mut d = sign;
    for i in 0..n {
        d = d * a[(i, i)];
    }
    d
}

/// Solves `A X = B` by LU with partial pivoting; `None` when a pivot vanishes.
pub fn solve<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Option<Mat<T>> {
    assert!(a.is_square() && a.rows == b.rows, "solve dimension mismatch");
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if lu[(r, k)].abs() > lu[(piv, k)].abs() {
                piv = r;
            }
        }
        if lu[(piv, k)] == T::zero() {
            return None;
        }
        if piv != k {
            for c in 0..n {
                let t = lu[(k, c)];
                lu[(k, c)] = lu[(piv, c)];
                lu[(piv, c)] = t;
            }
            for c in 0..x.cols {
                let t = x[(k, c)];
                x[(k, c)] = x[(piv, c)];
                x[(piv, c)] = t;
            }
        }
        for r in k + 1..n {
            let f = lu[(r, k)] / lu[(k, k)];
            if f == T::zero() {
                continue;
            }
            for c in k..n {
                lu[(r, c)] = lu[(r, c)] - f * lu[(k, c)];
            }
            for c in 0..x.cols {
                x[(r, c)] = x[(r, c)] - f * x[(k, c)];
            }
        }
    }
    // back substitution
    for c in 0..x.cols {
        for r in (0..n).rev() {
            let mut s = x[(r, c)];
            for k in r + 1..n {
                s = s - lu[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = s / lu[(r, r)];
        }
    }
    Some(x)
}

/// General inverse via LU; `None` when singular.
pub fn inverse<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    solve(a, &Mat::identity(a.rows))
}

/// Cholesky factor `L` (lower triangular, `A = L L^T`); `None` unless the
/// matrix is symmetric positive definite to working precision.
pub fn cholesky<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    if !a.is_square() {
        return None;
    }
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// `log det A` for symmetric positive definite `A`, via Cholesky.
pub fn log_det_spd<T: Real>(a: &Mat<T>) -> Option<T> {
    let l = cholesky(a)?;
    let two = real::<T>(2.0);
    Some(two * (0..a.rows).map(|i| l[(i, i)].ln()).sum())
}

/// Solves `A X = B` for symmetric positive definite `A` via Cholesky.
pub fn solve_spd<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Option<Mat<T>> {
    let l = cholesky(a)?;
    let n = a.rows;
    let mut x = b.clone();
    // forward: L y = b
    for c in 0..x.cols {
        for r in 0..n {
            let mut s = x[(r, c)];
            for k in 0..r {
                s = s - l[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = s / l[(r, r)];
        }
    }
    // backward: L^T x = y
    for c in 0..x.cols {
        for r in (0..n).rev() {
            let mut s = x[(r, c)];
            for k in r + 1..n {
                s = s - l[(k, r)] * x[(k, c)];
            }
            x[(r, c)] = s / l[(r, r)];
        }
    }
    Some(x)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inverse_spd<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    solve_spd(a, &Mat::identity(a.rows))
}

/// Singular values in descending order, by one-sided Jacobi orthogonalization.
///
/// One-sided Jacobi keeps relative accuracy on the small singular values,
/// which the rank threshold depends on.
pub fn singular_values<T: Real>(m: &Mat<T>) -> Vec<T> {
    let a = if m.rows >= m.cols { m.clone() } else { m.transpose() };
    let (rotated, _) = one_sided_jacobi(a);
    let mut sv: Vec<T> = (0..rotated.cols)
        .map(|c| rotated.col_vec(c).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Eigendecomposition of a symmetric positive definite matrix.
///
/// Returns `(eigenvalues, q)` with `a = q diag(eigenvalues) qᵀ` and the
/// eigenvectors in the columns of `q`. For symmetric input the one-sided
/// Jacobi rotation leaves columns `λᵢ qᵢ`, so eigenpairs drop out of the
/// column norms. `None` when some eigenvalue is not strictly positive.
pub fn spd_eigen<T: Real>(a: &Mat<T>) -> Option<(Vec<T>, Mat<T>)> {
    let (rotated, _) = one_sided_jacobi(a.clone());
    let n = rotated.cols;
    let mut eigs = Vec::with_capacity(n);
    let mut q = Mat::zeros(n, n);
    for c in 0..n {
        let norm = rotated.col_vec(c).iter().map(|&x| x * x).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        for r in 0..n {
            q[(r, c)] = rotated[(r, c)] / norm;
        }
        eigs.push(norm);
    }
    Some((eigs, q))
}

/// Numerical rank: singular values above `rel_tol` times the largest.
pub fn rank<T: Real>(m: &Mat<T>, rel_tol: T) -> usize {
    let sv = singular_values(m);
    let smax = sv[0];
    if !(smax > T::zero()) {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthogonalizes the columns of `a` in place by plane rotations; returns the
/// rotated matrix and the number of sweeps used.
fn one_sided_jacobi<T: Real>(mut a: Mat<T>) -> (Mat<T>, usize) {
    let (rows, cols) = (a.rows, a.cols);
    let eps = T::epsilon();
    let mut sweeps = 0;
    for _ in 0..60 {
        sweeps += 1;
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for r in 0..rows {
                    let (x, y) = (a[(r, i)], a[(r, j)]);
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                let two = real::<T>(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (x, y) = (a[(r, i)], a[(r, j)]);
                    a[(r, i)] = c * x - s * y;
                    a[(r, j)] = s * x + c * y;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    (a, sweeps)
}

/// Orthonormal basis of the column space of `m` (empty when the rank is
/// zero). Rank decisions use `rel_tol` against the largest singular value.
///
/// Jacobi rotations act on columns only, so they work unchanged on wide
/// matrices: surplus columns converge to zero and fall below the threshold.
pub fn orthonormal_col_space<T: Real>(m: &Mat<T>, rel_tol: T) -> Vec<Vec<T>> {
    let (rot, _) = one_sided_jacobi(m.clone());
    let mut cols: Vec<(T, Vec<T>)> = (0..rot.cols)
        .map(|c| {
            let v = rot.col_vec(c);
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            (norm, v)
        })
        .collect();
    cols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let smax = cols[0].0;
    if !(smax > T::zero()) {
        return Vec::new();
    }
    let mut basis = Vec::new();
    for (norm, v) in cols {
        if norm > rel_tol * smax {
            basis.push(v.iter().map(|&x| x / norm).collect());
        }
    }
    basis
}

/// Completes an orthonormal set to a full basis; returns the complement.
///
/// Picks the standard basis vector with the largest residual at each step,
/// so the result is well conditioned regardless of the input span.
pub fn orthonormal_complement<T: Real>(basis: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = basis.to_vec();
    let mut complement = Vec::new();
    while acc.len() < n {
        let mut best: Option<(T, Vec<T>)> = None;
        for i in 0..n {
            let mut v = vec![T::zero(); n];
            v[i] = T::one();
            project_out(&mut v, &acc);
            project_out(&mut v, &acc); // re-orthogonalize
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        let unit: Vec<T> = v.iter().map(|&x| x / norm).collect();
        acc.push(unit.clone());
        complement.push(unit);
    }
    complement
}

fn project_out<T: Real>(v: &mut [T], basis: &[Vec<T>]) {
    for b in basis {
        let dot: T = v.iter().zip(b).map(|(&x, &y)| x * y).sum();
        for (x, &y) in v.iter_mut().zip(b) {
            *x = *x - dot * y;
        }
    }
}
