//! Rotation matrices parameterized by skew-symmetric generators.
//!
//! Parameters are indexed by the index pairs `(i, j)` with `i < j` in
//! lexicographic order; parameter `a` for pair `(i, j)` sets `S[j][i] = +a`
//! and `S[i][j] = -a`, and the rotation is `exp(S)`. In two dimensions a
//! single parameter `t` therefore yields the counterclockwise rotation
//! `[[cos t, -sin t], [sin t, cos t]]`.

use super::{det, solve, LinalgError, Mat};
use crate::scalar::{real, Real};

/// Number of rotation parameters in dimension `n`.
pub fn skew_param_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// One list of skew parameters per map; `per_map[i]` has
/// `skew_param_len(n_i)` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationParams<T> {
    pub per_map: Vec<Vec<T>>,
}

impl<T: Real> RotationParams<T> {
    /// All-zero parameters: every rotation is the identity.
    pub fn identity(dims: &[usize]) -> Self {
        RotationParams {
            per_map: dims.iter().map(|&d| vec![T::zero(); skew_param_len(d)]).collect(),
        }
    }

    /// Total number of free angles across the maps.
    pub fn angle_count(&self) -> usize {
        self.per_map.iter().map(|v| v.len()).sum()
    }

    /// The rotation matrix of map `i`, whose dimension is `dim`.
    pub fn matrix_for(&self, i: usize, dim: usize) -> Mat<T> {
        rotation_matrix(dim, &self.per_map[i])
    }
}

/// Builds the skew-symmetric generator from its lower-triangle parameters.
pub fn skew_from_params<T: Real>(n: usize, params: &[T]) -> Mat<T> {
    assert_eq!(params.len(), skew_param_len(n), "wrong parameter count");
    let mut s = Mat::zeros(n, n);
    let mut a = 0;
    for i in 0..n {
        for j in i + 1..n {
            s[(j, i)] = params[a];
            s[(i, j)] = -params[a];
            a += 1;
        }
    }
    s
}

/// `exp` of the skew generator with the given parameters: a rotation matrix.
///
/// Dimensions 1-3 use closed forms; higher dimensions use a Pade approximant
/// with scaling and squaring.
pub fn rotation_matrix<T: Real>(n: usize, params: &[T]) -> Mat<T> {
    assert_eq!(params.len(), skew_param_len(n), "wrong parameter count");
    match n {
        0 => panic!("rotation in dimension zero"),
        1 => Mat::identity(1),
        2 => {
            let (c, s) = (params[0].cos(), params[0].sin());
            let mut r = Mat::zeros(2, 2);
            r[(0, 0)] = c;
            r[(0, 1)] = -s;
            r[(1, 0)] = s;
            r[(1, 1)] = c;
            r
        }
        3 => rodrigues(params),
        _ => expm_pade(&skew_from_params(n, params)),
    }
}

/// Closed form in three dimensions via the Rodrigues formula.
fn rodrigues<T: Real>(params: &[T]) -> Mat<T> {
    let s = skew_from_params(3, params);
    let theta2: T = params.iter().map(|&p| p * p).sum();
    let theta = theta2.sqrt();
    // sin(t)/t and (1-cos(t))/t^2, series-expanded near zero to avoid
    // cancellation
    let (k1, k2) = if theta < T::epsilon().powf(real::<T>(0.25)) {
        let c6 = real::<T>(1.0 / 6.0);
        let c120 = real::<T>(1.0 / 120.0);
        let c24 = real::<T>(1.0 / 24.0);
        let c720 = real::<T>(1.0 / 720.0);
        let half = real::<T>(0.5);
        (
            T::one() - theta2 * c6 + theta2 * theta2 * c120,
            half - theta2 * c24 + theta2 * theta2 * c720,
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let s2 = s.matmul(&s);
    Mat::identity(3).add(&s.scale(k1)).add(&s2.scale(k2))
}

/// Diagonal Pade(6,6) exponential with scaling and squaring; adequate for
/// the small skew matrices used here.
fn expm_pade<T: Real>(s: &Mat<T>) -> Mat<T> {
    let n = s.rows();
    // crude norm bound: n * max |entry| dominates the 1-norm
    let norm = s.max_abs() * real::<T>(n as f64);
    let mut scaled = s.clone();
    let mut squarings = 0u32;
    if norm > real::<T>(0.5) {
        let ratio = (norm / real::<T>(0.5)).to_f64().unwrap();
        squarings = ratio.log2().ceil() as u32;
        scaled = scaled.scale(real::<T>(0.5f64.powi(squarings as i32)));
    }
    let coeffs: [f64; 7] =
        [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let mut p = Mat::zeros(n, n);
    let mut q = Mat::zeros(n, n);
    let mut power = Mat::identity(n);
    for (j, &c) in coeffs.iter().enumerate() {
        let term = power.scale(real::<T>(c));
        p = p.add(&term);
        if j % 2 == 0 {
            q = q.add(&term);
        } else {
            q = q.sub(&term);
        }
        if j + 1 < coeffs.len() {
            power = power.matmul(&scaled);
        }
    }
    let mut r = solve(&q, &p).expect("Pade denominator is nonsingular for scaled skew matrices");
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// Assembles the symmetric positive definite matrix `R diag(e) R^T` from
/// strictly positive eigenvalues `e` and rotation parameters.
pub fn assemble_spd<T: Real>(eigenvalues: &[T], params: &[T]) -> Result<Mat<T>, LinalgError> {
    if eigenvalues.is_empty() {
        return Err(LinalgError::Empty);
    }
    if eigenvalues.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
        return Err(LinalgError::NonPositiveEigenvalue);
    }
    let n = eigenvalues.len();
    if params.len() != skew_param_len(n) {
        return Err(LinalgError::Dim(format!(
            "{} eigenvalues need {} rotation parameters, got {}",
            n,
            skew_param_len(n),
            params.len()
        )));
    }
    let r = rotation_matrix(n, params);
    let scaled = Mat::from_fn(n, n, |i, j| r[(i, j)] * eigenvalues[j]);
    Ok(scaled.matmul(&r.transpose()))
}

/// Orthogonality defect `max(|R^T R - I|, |det R - 1|)`; zero for a perfect
/// rotation.
pub fn rotation_defect<T: Real>(r: &Mat<T>) -> T {
    let gram_err = r.transpose().matmul(r).max_abs_diff(&Mat::identity(r.rows()));
    let det_err = (det(r) - T::one()).abs();
    gram_err.max(det_err)
}
