//! The gaussian formulation: the constant is the supremum of
//! `prod_j det(A_j)^{p_j/2} / det(sum_j p_j L_j^T A_j L_j)^{1/2}` over
//! positive definite `A_j`. Evaluation, multi-start ascent in a spectral
//! chart, and the classical self-consistency fixed-point step live here.

use crate::datum::{validate_datum, BLDatum};
use crate::finiteness::{decide_finiteness, FinitenessStatus};
use crate::linalg::{
    cholesky, inverse_spd, log_det_spd, rotation_matrix, singular_values, skew_param_len,
    spd_eigen, Mat,
};
use crate::scalar::{real, Real};
use crate::solve::{OptimizeReport, SolveConfig, SolveError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Denominator determinants at or below 1e-300 are reported as degenerate.
const LOG_DET_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

/// Ratios past this guard abort the ascent as apparently unbounded.
const UNBOUNDED_GUARD: f64 = 1e9;

/// Candidate budget for the finiteness gate run before any ascent.
const FINITENESS_BUDGET: usize = 64;

/// One positive definite matrix per map, the gaussian trial input.
///
/// Invariants: `a[j]` is `n_j x n_j`, symmetric to about 1e-10 of its
/// magnitude, and positive definite.
#[derive(Clone, Debug)]
pub struct GaussianInput<T> {
    pub a: Vec<Mat<T>>,
}

impl<T: Real> GaussianInput<T> {
    /// Identity matrices of the given dimensions.
    pub fn identity(dims: &[usize]) -> Self {
        GaussianInput { a: dims.iter().map(|&d| Mat::identity(d)).collect() }
    }
}

fn check_input<T: Real>(datum: &BLDatum<T>, input: &GaussianInput<T>) -> Result<(), SolveError<T>> {
    if input.a.len() != datum.maps.len() {
        return Err(SolveError::Dimension(format!(
            "expected {} gaussian matrices, got {}",
            datum.maps.len(),
            input.a.len()
        )));
    }
    for (j, (m, a)) in datum.maps.iter().zip(&input.a).enumerate() {
        let nj = m.target_dim();
        if a.rows() != nj || a.cols() != nj {
            return Err(SolveError::Dimension(format!(
                "matrix {} must be {}x{}, got {}x{}",
                j,
                nj,
                nj,
                a.rows(),
                a.cols()
            )));
        }
        let tol = real::<T>(1e-10) * (T::one() + a.max_abs());
        if !a.is_symmetric_within(tol) {
            return Err(SolveError::Dimension(format!("matrix {} is not symmetric", j)));
        }
        if cholesky(a).is_none() {
            return Err(SolveError::Dimension(format!("matrix {} is not positive definite", j)));
        }
    }
    Ok(())
}

/// `sum_j p_j L_j^T A_j L_j`, the quadratic form in the denominator.
fn denominator<T: Real>(datum: &BLDatum<T>, a: &[Mat<T>]) -> Mat<T> {
    let mut m = Mat::zeros(datum.n, datum.n);
    for (map, aj) in datum.maps.iter().zip(a) {
        let term = map.matrix.transpose().matmul(&aj.matmul(&map.matrix)).scale(map.p);
        m = m.add(&term);
    }
    m
}

/// Evaluates the gaussian ratio. A lower bound for the constant at every
/// valid input; errors with the denominator's spectrum when that matrix is
/// singular to working precision.
pub fn gaussian_ratio<T: Real>(
    datum: &BLDatum<T>,
    input: &GaussianInput<T>,
) -> Result<T, SolveError<T>> {
    let report = validate_datum(datum);
    if !report.ok() {
        return Err(SolveError::InvalidDatum(report));
    }
    check_input(datum, input)?;
    let mut num = T::zero();
    let half = real::<T>(0.5);
    for (map, aj) in datum.maps.iter().zip(&input.a) {
        let ld = log_det_spd(aj)
            .ok_or_else(|| SolveError::Dimension("input matrix is not positive definite".into()))?;
        num = num + map.p * half * ld;
    }
    let m = denominator(datum, &input.a);
    match log_det_spd(&m) {
        Some(ld) if ld > real::<T>(LOG_DET_FLOOR) => Ok((num - half * ld).exp()),
        _ => Err(SolveError::DegenerateDenominator { spectrum: singular_values(&m) }),
    }
}

/// Ascent state: per-map log-eigenvalues and orthogonal frames. The matrix
/// of map `j` is `Q_j diag(exp w_j) Q_j^T`, positive definite by
/// construction for any state.
#[derive(Clone, Debug)]
struct Chart<T> {
    w: Vec<Vec<T>>,
    q: Vec<Mat<T>>,
}

impl<T: Real> Chart<T> {
    fn identity(dims: &[usize]) -> Self {
        Chart {
            w: dims.iter().map(|&d| vec![T::zero(); d]).collect(),
            q: dims.iter().map(|&d| Mat::identity(d)).collect(),
        }
    }

    fn assemble(&self) -> Vec<Mat<T>> {
        self.w
            .iter()
            .zip(&self.q)
            .map(|(w, q)| {
                let d = w.len();
                let lambda: Vec<T> = w.iter().map(|&x| x.exp()).collect();
                Mat::from_fn(d, d, |r, c| {
                    (0..d).map(|i| lambda[i] * q[(r, i)] * q[(c, i)]).sum()
                })
            })
            .collect()
    }

    /// Shifts all log-eigenvalues so that `prod det(A_j)^{p_j} = 1`,
    /// removing the scale direction (value-neutral when the exponent
    /// balance holds).
    fn normalize(&mut self, datum: &BLDatum<T>) {
        let weighted: T = datum
            .maps
            .iter()
            .zip(&self.w)
            .map(|(m, w)| m.p * w.iter().copied().sum())
            .sum();
        let mass: T = datum
            .maps
            .iter()
            .map(|m| m.p * real::<T>(m.target_dim() as f64))
            .sum();
        if mass > real::<T>(1e-12) {
            let shift = -weighted / mass;
            for w in &mut self.w {
                for x in w.iter_mut() {
                    *x = *x + shift;
                }
            }
        }
    }
}

/// Log-ratio plus the pieces the gradient needs. The numerator log-dets are
/// read straight off the chart.
fn chart_eval<T: Real>(
    datum: &BLDatum<T>,
    chart: &Chart<T>,
) -> Result<(T, Vec<Mat<T>>, Mat<T>), SolveError<T>> {
    let half = real::<T>(0.5);
    let num: T = datum
        .maps
        .iter()
        .zip(&chart.w)
        .map(|(m, w)| m.p * half * w.iter().copied().sum())
        .sum();
    let a = chart.assemble();
    let m = denominator(datum, &a);
    let ld = match log_det_spd(&m) {
        Some(ld) if ld > real::<T>(LOG_DET_FLOOR) => ld,
        _ => return Err(SolveError::DegenerateDenominator { spectrum: singular_values(&m) }),
    };
    let m_inv = inverse_spd(&m)
        .ok_or_else(|| SolveError::DegenerateDenominator { spectrum: singular_values(&m) })?;
    Ok((num - half * ld, a, m_inv))
}

/// Analytic gradient of the log-ratio in the chart at the current state
/// (rotations differentiated at the identity of the local frame). Returns
/// per-map eigenvalue and angle gradients with their joint max-norm.
fn chart_gradient<T: Real>(
    datum: &BLDatum<T>,
    chart: &Chart<T>,
    m_inv: &Mat<T>,
) -> (Vec<Vec<T>>, Vec<Vec<T>>, T) {
    let half = real::<T>(0.5);
    let two = real::<T>(2.0);
    let mut grad_w = Vec::with_capacity(datum.maps.len());
    let mut grad_t = Vec::with_capacity(datum.maps.len());
    let mut norm = T::zero();
    for (map, (w, q)) in datum.maps.iter().zip(chart.w.iter().zip(&chart.q)) {
        let d = w.len();
        let lambda: Vec<T> = w.iter().map(|&x| x.exp()).collect();
        // G_j = (p_j/2)(A_j^{-1} - L_j M^{-1} L_j^T), with A_j^{-1} exact
        // from the chart
        let a_inv = Mat::from_fn(d, d, |r, c| {
            (0..d).map(|i| q[(r, i)] * q[(c, i)] / lambda[i]).sum()
        });
        let pushforward = map.matrix.matmul(m_inv).matmul(&map.matrix.transpose());
        let g = a_inv.sub(&pushforward).scale(map.p * half);
        let h = q.transpose().matmul(&g).matmul(q);
        let gw: Vec<T> = (0..d).map(|i| lambda[i] * h[(i, i)]).collect();
        let mut gt = Vec::with_capacity(skew_param_len(d));
        for i in 0..d {
            for j in i + 1..d {
                gt.push(two * (lambda[i] - lambda[j]) * h[(i, j)]);
            }
        }
        for &x in gw.iter().chain(&gt) {
            norm = norm.max(x.abs());
        }
        grad_w.push(gw);
        grad_t.push(gt);
    }
    (grad_w, grad_t, norm)
}

fn advance<T: Real>(
    datum: &BLDatum<T>,
    chart: &Chart<T>,
    grad_w: &[Vec<T>],
    grad_t: &[Vec<T>],
    step: T,
) -> Chart<T> {
    let mut next = chart.clone();
    for j in 0..next.w.len() {
        for i in 0..next.w[j].len() {
            next.w[j][i] = next.w[j][i] + step * grad_w[j][i];
        }
        if !grad_t[j].is_empty() {
            let angles: Vec<T> = grad_t[j].iter().map(|&g| step * g).collect();
            next.q[j] = next.q[j].matmul(&rotation_matrix(next.w[j].len(), &angles));
        }
    }
    next.normalize(datum);
    next
}

struct StartRun<T> {
    log_value: T,
    chart: Chart<T>,
    iterations: usize,
    grad_norm: T,
    converged: bool,
}

/// One self-consistency update `A_j <- (L_j M^{-1} L_j^T)^{-1}` re-entered
/// into the chart, or `None` when the step or the eigendecomposition of
/// its output fails.
fn fixed_point_chart<T: Real>(datum: &BLDatum<T>, a: &[Mat<T>]) -> Option<Chart<T>> {
    let next = fixed_point_step(datum, &GaussianInput { a: a.to_vec() }).ok()?;
    let mut w = Vec::with_capacity(next.a.len());
    let mut q = Vec::with_capacity(next.a.len());
    for m in &next.a {
        let (eigs, frame) = spd_eigen(m)?;
        let logs: Vec<T> = eigs.iter().map(|&e| e.ln()).collect();
        if logs.iter().any(|x| !x.is_finite()) {
            return None;
        }
        w.push(logs);
        q.push(frame);
    }
    let mut chart = Chart { w, q };
    chart.normalize(datum);
    Some(chart)
}

fn run_start<T: Real>(
    datum: &BLDatum<T>,
    initial: Chart<T>,
    config: &SolveConfig<T>,
) -> Result<StartRun<T>, SolveError<T>> {
    let mut chart = initial;
    chart.normalize(datum);
    let (mut f, mut a_cur, mut m_inv) = chart_eval(datum, &chart)?;
    let guard = real::<T>(UNBOUNDED_GUARD).ln();
    let half = real::<T>(0.5);
    let mut alpha = T::one();
    let mut iterations = 0;
    let mut grad_norm = T::infinity();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let (gw, gt, norm) = chart_gradient(datum, &chart, &m_inv);
        grad_norm = norm;
        if norm <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        // Self-consistency jump first: it contracts geometrically near the
        // optimum where plain ascent zigzags along curved ridges.
        if let Some(jump) = fixed_point_chart(datum, &a_cur) {
            if let Ok((fj, aj, mj)) = chart_eval(datum, &jump) {
                if fj > f {
                    chart = jump;
                    f = fj;
                    a_cur = aj;
                    m_inv = mj;
                    if f > guard {
                        return Err(SolveError::ApparentlyUnbounded { value: f.exp() });
                    }
                    continue;
                }
            }
        }
        let mut step = alpha;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = advance(datum, &chart, &gw, &gt, step);
            match chart_eval(datum, &trial) {
                Ok((ft, at, mt)) if ft > f => {
                    chart = trial;
                    f = ft;
                    a_cur = at;
                    m_inv = mt;
                    if f > guard {
                        return Err(SolveError::ApparentlyUnbounded { value: f.exp() });
                    }
                    alpha = (step + step).min(real::<T>(1e4));
                    accepted = true;
                    break;
                }
                _ => step = step * half,
            }
        }
        if !accepted {
            // stalled at floating-point resolution
            break;
        }
    }
    Ok(StartRun { log_value: f, chart, iterations, grad_norm, converged })
}

/// Multi-start ascent of the log gaussian ratio over the spectral chart.
///
/// Data certified infinite are refused with the certificate; ratios past
/// the 1e9 guard abort as apparently unbounded. Deterministic for a given
/// seed: start `i` draws from the stream `seed ^ i`, and the merge takes
/// the best value with ties to the lowest start index.
pub fn optimize_lieb<T: Real>(
    datum: &BLDatum<T>,
    config: &SolveConfig<T>,
) -> Result<OptimizeReport<GaussianInput<T>, T>, SolveError<T>> {
    let report = validate_datum(datum);
    if !report.ok() {
        return Err(SolveError::InvalidDatum(report));
    }
    let verdict = decide_finiteness(datum, FINITENESS_BUDGET, config.seed)?;
    if verdict.status == FinitenessStatus::Infinite {
        return Err(SolveError::Infinite {
            certificate: verdict.certificate.expect("infinite verdicts carry a certificate"),
        });
    }
    let dims: Vec<usize> = datum.maps.iter().map(|m| m.target_dim()).collect();
    let starts = config.starts.max(1);
    let runs: Result<Vec<StartRun<T>>, SolveError<T>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let chart = if s == 0 {
                Chart::identity(&dims)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ s as u64);
                let w = dims
                    .iter()
                    .map(|&d| (0..d).map(|_| real::<T>(rng.gen_range(-2.0..2.0))).collect())
                    .collect();
                let q = dims
                    .iter()
                    .map(|&d| {
                        let angles: Vec<T> = (0..skew_param_len(d))
                            .map(|_| real::<T>(rng.gen_range(0.0..std::f64::consts::TAU)))
                            .collect();
                        rotation_matrix(d, &angles)
                    })
                    .collect();
                Chart { w, q }
            };
            run_start(datum, chart, config)
        })
        .collect();
    let runs = runs?;
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.log_value.partial_cmp(&b.log_value).unwrap().then(ib.cmp(ia))
        })
        .map(|(_, r)| r)
        .expect("at least one start");
    let argument = GaussianInput { a: best.chart.assemble() };
    let value = gaussian_ratio(datum, &argument)?;
    Ok(OptimizeReport {
        value,
        argument,
        iterations: best.iterations,
        converged: best.converged,
        grad_norm: best.grad_norm,
        starts_used: starts,
    })
}

/// One step of the classical self-consistency map `A_j <- (L_j M^{-1}
/// L_j^T)^{-1}`. Fixed points are stationary for the ratio; empirically the
/// ratio is nondecreasing along the iteration (checked by tests, not
/// assumed). Useful both as a solver and as a stationarity probe on ascent
/// output.
pub fn fixed_point_step<T: Real>(
    datum: &BLDatum<T>,
    input: &GaussianInput<T>,
) -> Result<GaussianInput<T>, SolveError<T>> {
    check_input(datum, input)?;
    let m = denominator(datum, &input.a);
    let m_inv = inverse_spd(&m)
        .ok_or_else(|| SolveError::StepFailure("denominator matrix is singular".into()))?;
    let mut next = Vec::with_capacity(datum.maps.len());
    for (j, map) in datum.maps.iter().enumerate() {
        let b = map.matrix.matmul(&m_inv).matmul(&map.matrix.transpose());
        let a = inverse_spd(&b).ok_or_else(|| {
            SolveError::StepFailure(format!("pushforward of map {} is singular", j))
        })?;
        next.push(a);
    }
    Ok(GaussianInput { a: next })
}
