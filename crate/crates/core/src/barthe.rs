//! The weighted-subset formulation: flatten the datum into `K` scalings
//! with exponents `q`, expand the denominator determinant over column
//! subsets, maximize over scalings (a concave problem in log coordinates),
//! and search rotations in an outer loop. The optimum of the squared ratio
//! equals the squared constant.

use crate::datum::{validate_datum, BLDatum};
use crate::finiteness::{divergence_certificate, DivergenceCheck, DivergenceDirection, SUPPORT_TOL};
use crate::linalg::{cauchy_binet_det, LinalgError, RotationParams};
use crate::scalar::{real, Real};
use crate::solve::{InfinityCertificate, OptimizeReport, SolveConfig, SolveError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Below this log-denominator the ratio is reported as infinite rather than
/// evaluated (the value would exceed roughly 1e300 anyway).
const LOG_DEN_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

/// Inner iteration cap used by the rotation search; each outer step solves
/// the scaling problem from a warm start, which needs far fewer steps than
/// a cold public solve.
const INNER_MAX_ITER: usize = 200;

/// Forward differences on rotation angles use this step.
const OUTER_FD_STEP: f64 = 1e-5;

/// Convergence threshold floor for the forward-difference rotation
/// gradient; finer tolerances are unresolvable at the chosen step.
const OUTER_FD_TOL: f64 = 3e-5;

/// The flat reindexing of a datum: one scalar index per target dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FlattenedExponents<T> {
    /// Total flattened count, the sum of the target dimensions.
    pub k: usize,
    /// Exponents `q`, constant on each map's block.
    pub q: Vec<T>,
    /// `index_map[k] = (i, j)`: flat index `k` is row `j` of map `i`.
    pub index_map: Vec<(usize, usize)>,
}

/// Maps each flat index `k` to its (map, row) pair and repeats each map's
/// exponent across its block.
pub fn flatten_exponents<T: Real>(datum: &BLDatum<T>) -> FlattenedExponents<T> {
    let mut q = Vec::new();
    let mut index_map = Vec::new();
    for (i, m) in datum.maps.iter().enumerate() {
        for j in 0..m.target_dim() {
            q.push(m.p);
            index_map.push((i, j));
        }
    }
    FlattenedExponents { k: q.len(), q, index_map }
}

/// One subset's weight data.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetWeight<T> {
    /// Flat indices of the subset, ascending.
    pub subset: Vec<usize>,
    /// Squared determinant of the selected columns.
    pub d: T,
    /// Product of the subset's exponents.
    pub q: T,
}

/// All `C(K, n)` subset weights in lexicographic subset order.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetWeights<T> {
    /// Ambient dimension (subset size).
    pub n: usize,
    /// Flattened index count.
    pub k: usize,
    pub entries: Vec<SubsetWeight<T>>,
}

/// The flattened column vectors `v_k`: row `j` of `R_i L_i`.
fn flattened_columns<T: Real>(datum: &BLDatum<T>, rotations: &RotationParams<T>) -> Vec<Vec<T>> {
    let mut columns = Vec::new();
    for (i, m) in datum.maps.iter().enumerate() {
        let rotated = rotations.matrix_for(i, m.target_dim()).matmul(&m.matrix);
        for j in 0..m.target_dim() {
            columns.push(rotated.row(j).to_vec());
        }
    }
    columns
}

/// Computes the subset weights `d_I` (squared minors of the rotated,
/// flattened columns) and `q_I` (exponent products). With identity
/// rotations on rank-one data the columns are the raw defining vectors.
#[allow(non_snake_case)]
pub fn compute_dI<T: Real>(
    datum: &BLDatum<T>,
    rotations: &RotationParams<T>,
) -> Result<SubsetWeights<T>, SolveError<T>> {
    let flat = flatten_exponents(datum);
    let columns = flattened_columns(datum, rotations);
    let expansion = cauchy_binet_det(&columns, &flat.q).map_err(|e| match e {
        LinalgError::TooFewColumns { k, n } => SolveError::Dimension(format!(
            "flattened index count {} is below the ambient dimension {}; no subset carries the determinant",
            k, n
        )),
        LinalgError::TooManyColumns { k, max } => SolveError::Unsupported(format!(
            "flattened index count {} exceeds the subset-enumeration limit {}",
            k, max
        )),
        other => SolveError::Dimension(other.to_string()),
    })?;
    let entries = expansion
        .terms
        .into_iter()
        .map(|(subset, d)| {
            let q: T = subset.iter().map(|&k| flat.q[k]).product();
            SubsetWeight { subset, d, q }
        })
        .collect();
    Ok(SubsetWeights { n: datum.n, k: flat.k, entries })
}

fn logsumexp<T: Real>(terms: &[T]) -> T {
    let m = terms.iter().fold(T::neg_infinity(), |acc, &x| acc.max(x));
    if !m.is_finite() {
        return m;
    }
    let sum: T = terms.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// The squared-constant objective `prod_k lambda_k^{q_k} / sum_I lambda_I
/// q_I d_I`, evaluated in log space. Returns infinity when the denominator
/// has no weight or underflows.
pub fn barthe_objective<T: Real>(
    weights: &SubsetWeights<T>,
    flat: &FlattenedExponents<T>,
    lambda: &[T],
) -> T {
    assert_eq!(lambda.len(), flat.k, "scaling count must match the flattened index count");
    assert!(lambda.iter().all(|&l| l > T::zero()), "scalings must be strictly positive");
    let log_lambda: Vec<T> = lambda.iter().map(|&l| l.ln()).collect();
    let num_log: T = flat.q.iter().zip(&log_lambda).map(|(&q, &u)| q * u).sum();
    let terms: Vec<T> = weights
        .entries
        .iter()
        .filter(|e| e.q * e.d > T::zero())
        .map(|e| {
            let s: T = e.subset.iter().map(|&k| log_lambda[k]).sum();
            s + (e.q * e.d).ln()
        })
        .collect();
    if terms.is_empty() {
        return T::infinity();
    }
    let den_log = logsumexp(&terms);
    if den_log < real::<T>(LOG_DEN_FLOOR) {
        return T::infinity();
    }
    (num_log - den_log).exp()
}

/// How a scaling maximization ended.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaStatus<T> {
    /// Gradient tolerance met; the value is the global supremum over
    /// scalings for these weights (the problem is concave).
    Optimal,
    /// Budget exhausted before the tolerance; value and gradient norm are
    /// reported as found.
    IterationLimit,
    /// Certified unbounded along the carried direction.
    Unbounded(DivergenceDirection<T>),
    /// No subset carries weight; the objective is infinite everywhere.
    IdenticallyInfinite,
}

/// Result of the inner scaling maximization.
#[derive(Clone, Debug)]
pub struct LambdaReport<T> {
    /// Ratio at exit (infinite for the unbounded statuses). This is the
    /// squared-constant scale.
    pub value: T,
    /// Log of `value`; finite values are exact here even when `value`
    /// overflows.
    pub log_value: T,
    pub lambda: Vec<T>,
    pub status: LambdaStatus<T>,
    pub iterations: usize,
    pub grad_norm: T,
}

/// Maximizes the objective over scalings from `lambda = 1`.
///
/// The log-objective in `u = log lambda` is concave (linear term minus a
/// log-sum-exp), so a damped Newton ascent converges globally; a divergence
/// check runs first so unbounded problems are certified rather than chased.
pub fn optimize_lambda<T: Real>(
    weights: &SubsetWeights<T>,
    flat: &FlattenedExponents<T>,
    config: &SolveConfig<T>,
) -> LambdaReport<T> {
    optimize_lambda_from(weights, flat, config, None)
}

pub(crate) fn optimize_lambda_from<T: Real>(
    weights: &SubsetWeights<T>,
    flat: &FlattenedExponents<T>,
    config: &SolveConfig<T>,
    warm: Option<&[T]>,
) -> LambdaReport<T> {
    let k = weights.k;
    let support_tol = real::<T>(SUPPORT_TOL);
    let support: Vec<(Vec<usize>, T)> = weights
        .entries
        .iter()
        .filter(|e| e.q * e.d > support_tol)
        .map(|e| (e.subset.clone(), (e.q * e.d).ln()))
        .collect();
    let infinite = |status: LambdaStatus<T>| LambdaReport {
        value: T::infinity(),
        log_value: T::infinity(),
        lambda: vec![T::one(); k],
        status,
        iterations: 0,
        grad_norm: T::infinity(),
    };
    if support.is_empty() {
        return infinite(LambdaStatus::IdenticallyInfinite);
    }
    let sum_q: T = flat.q.iter().copied().sum();
    let scaling_holds = (sum_q - real::<T>(weights.n as f64)).abs() <= real::<T>(1e-9);
    // full support plus balanced exponents cannot diverge: the linear form
    // <q, u> never beats the top-n coordinate sum when 0 <= q <= 1 sums to n
    let full_support = support.len() == weights.entries.len();
    if !(scaling_holds && full_support) {
        match divergence_certificate(weights, &flat.q) {
            DivergenceCheck::Diverges(dir) => return infinite(LambdaStatus::Unbounded(dir)),
            DivergenceCheck::IdenticallyInfinite => {
                return infinite(LambdaStatus::IdenticallyInfinite)
            }
            DivergenceCheck::Bounded => {}
        }
    }
    let tol = config.tol.min(real::<T>(1e-9));
    let mut u = match warm {
        Some(w) => w.to_vec(),
        None => vec![T::zero(); k],
    };
    let gauge = scaling_holds;
    let project = |u: &mut Vec<T>| {
        if gauge && sum_q > T::zero() {
            let c: T = flat.q.iter().zip(u.iter()).map(|(&q, &x)| q * x).sum::<T>() / sum_q;
            for x in u.iter_mut() {
                *x = *x - c;
            }
        }
    };
    project(&mut u);

    let eval = |u: &[T]| -> (T, Vec<T>) {
        // returns (g, softmax weights over support)
        let terms: Vec<T> = support
            .iter()
            .map(|(subset, c)| subset.iter().map(|&idx| u[idx]).sum::<T>() + *c)
            .collect();
        let lse = logsumexp(&terms);
        let qu: T = flat.q.iter().zip(u).map(|(&q, &x)| q * x).sum();
        let pi: Vec<T> = terms.iter().map(|&t| (t - lse).exp()).collect();
        (qu - lse, pi)
    };

    let (mut g, mut pi) = eval(&u);
    let mut mu = real::<T>(1e-8);
    let mut iterations = 0;
    let mut grad_norm = T::infinity();
    let mut converged = false;
    for _ in 0..config.max_iter {
        // gradient: q minus the softmax-expected indicator
        let mut grad = flat.q.clone();
        for ((subset, _), &w) in support.iter().zip(&pi) {
            for &idx in subset {
                grad[idx] = grad[idx] - w;
            }
        }
        grad_norm = grad.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if grad_norm <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        // covariance of the indicator under the softmax
        let mut mean = vec![T::zero(); k];
        for ((subset, _), &w) in support.iter().zip(&pi) {
            for &idx in subset {
                mean[idx] = mean[idx] + w;
            }
        }
        let mut cov = crate::linalg::Mat::zeros(k, k);
        for ((subset, _), &w) in support.iter().zip(&pi) {
            for &a in subset {
                for &b in subset {
                    cov[(a, b)] = cov[(a, b)] + w;
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                cov[(a, b)] = cov[(a, b)] - mean[a] * mean[b];
            }
        }
        let trace: T = (0..k).map(|i| cov[(i, i)]).sum();
        let floor = real::<T>(1e-12) * (T::one() + trace / real::<T>(k as f64));
        let grad_col = crate::linalg::Mat::from_cols(&[grad.clone()]).expect("k >= 1");
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = cov.clone();
            for i in 0..k {
                damped[(i, i)] = damped[(i, i)] + mu + floor;
            }
            if let Some(delta) = crate::linalg::solve_spd(&damped, &grad_col) {
                let mut trial: Vec<T> = (0..k).map(|i| u[i] + delta[(i, 0)]).collect();
                project(&mut trial);
                let (g_trial, pi_trial) = eval(&trial);
                if g_trial > g {
                    u = trial;
                    g = g_trial;
                    pi = pi_trial;
                    mu = (mu * real::<T>(0.3)).max(real::<T>(1e-14));
                    accepted = true;
                    break;
                }
            }
            mu = mu * real::<T>(10.0);
        }
        if !accepted {
            // progress has hit floating-point resolution; a stalled state
            // with a vanishing gradient is the optimum at that resolution
            converged = grad_norm <= tol * real::<T>(100.0);
            break;
        }
    }
    let lambda: Vec<T> = u.iter().map(|&x| x.exp()).collect();
    LambdaReport {
        value: g.exp(),
        log_value: g,
        lambda,
        status: if converged { LambdaStatus::Optimal } else { LambdaStatus::IterationLimit },
        iterations,
        grad_norm,
    }
}

/// The scaling-and-rotation maximizer argument.
#[derive(Clone, Debug)]
pub struct BartheParams<T> {
    pub lambda: Vec<T>,
    pub rotations: RotationParams<T>,
}

struct StartRun<T> {
    log_value: T,
    lambda: Vec<T>,
    angles: Vec<T>,
    iterations: usize,
    grad_norm: T,
    converged: bool,
}

fn split_angles<T: Real>(dims: &[usize], flat: &[T]) -> RotationParams<T> {
    let mut per_map = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in dims {
        let len = crate::linalg::skew_param_len(d);
        per_map.push(flat[offset..offset + len].to_vec());
        offset += len;
    }
    RotationParams { per_map }
}

fn inner_at<T: Real>(
    datum: &BLDatum<T>,
    dims: &[usize],
    flat: &FlattenedExponents<T>,
    angles: &[T],
    config: &SolveConfig<T>,
    warm: Option<&[T]>,
) -> Result<LambdaReport<T>, SolveError<T>> {
    let rotations = split_angles(dims, angles);
    let weights = compute_dI(datum, &rotations)?;
    let report = optimize_lambda_from(&weights, flat, config, warm);
    match &report.status {
        LambdaStatus::Unbounded(dir) => Err(SolveError::Infinite {
            certificate: InfinityCertificate::Divergence {
                direction: dir.u.clone(),
                gap: dir.gap,
            },
        }),
        LambdaStatus::IdenticallyInfinite => {
            Err(SolveError::Infinite { certificate: InfinityCertificate::VanishingWeights })
        }
        _ => Ok(report),
    }
}

fn run_start<T: Real>(
    datum: &BLDatum<T>,
    dims: &[usize],
    flat: &FlattenedExponents<T>,
    initial_angles: Vec<T>,
    config: &SolveConfig<T>,
) -> Result<StartRun<T>, SolveError<T>> {
    let inner_cfg = SolveConfig { max_iter: INNER_MAX_ITER, ..*config };
    let mut angles = initial_angles;
    let mut current = inner_at(datum, dims, flat, &angles, &inner_cfg, None)?;
    if angles.is_empty() {
        return Ok(StartRun {
            log_value: current.log_value,
            lambda: current.lambda.clone(),
            angles,
            iterations: current.iterations,
            grad_norm: current.grad_norm,
            converged: matches!(current.status, LambdaStatus::Optimal),
        });
    }
    let h = real::<T>(OUTER_FD_STEP);
    let outer_tol = config.tol.max(real::<T>(OUTER_FD_TOL));
    let mut iterations = 0;
    let mut fd_norm = T::infinity();
    let mut converged = false;
    let warm_of = |rep: &LambdaReport<T>| -> Vec<T> { rep.lambda.iter().map(|&l| l.ln()).collect() };
    for _ in 0..config.max_iter {
        iterations += 1;
        let warm = warm_of(&current);
        let mut grad = vec![T::zero(); angles.len()];
        for t in 0..angles.len() {
            let mut probe_angles = angles.clone();
            probe_angles[t] = probe_angles[t] + h;
            let probe = inner_at(datum, dims, flat, &probe_angles, &inner_cfg, Some(&warm))?;
            grad[t] = (probe.log_value - current.log_value) / h;
        }
        fd_norm = grad.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if fd_norm <= outer_tol {
            converged = true;
            break;
        }
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial_angles: Vec<T> =
                angles.iter().zip(&grad).map(|(&a, &g)| a + alpha * g).collect();
            let trial = inner_at(datum, dims, flat, &trial_angles, &inner_cfg, Some(&warm))?;
            if trial.log_value > current.log_value {
                angles = trial_angles;
                current = trial;
                accepted = true;
                break;
            }
            alpha = alpha * real::<T>(0.5);
        }
        if !accepted {
            converged = fd_norm <= outer_tol;
            break;
        }
    }
    Ok(StartRun {
        log_value: current.log_value,
        lambda: current.lambda.clone(),
        angles,
        iterations,
        grad_norm: fd_norm,
        converged,
    })
}

/// Multi-start maximization over scalings and rotations. Returns the
/// constant itself (square root of the maximized ratio). Rank-one data have
/// no rotation freedom and collapse to a single globally-solved start; an
/// unbounded or weightless inner problem surfaces as an infinity error with
/// its certificate. Deterministic for a given seed.
pub fn optimize_barthe<T: Real>(
    datum: &BLDatum<T>,
    config: &SolveConfig<T>,
) -> Result<OptimizeReport<BartheParams<T>, T>, SolveError<T>> {
    let report = validate_datum(datum);
    if !report.ok() {
        return Err(SolveError::InvalidDatum(report));
    }
    let dims: Vec<usize> = datum.maps.iter().map(|m| m.target_dim()).collect();
    let flat = flatten_exponents(datum);
    let total_angles: usize = dims.iter().map(|&d| crate::linalg::skew_param_len(d)).sum();
    let starts = if total_angles == 0 { 1 } else { config.starts.max(1) };
    let runs: Result<Vec<StartRun<T>>, SolveError<T>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let angles = if s == 0 {
                vec![T::zero(); total_angles]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ s as u64);
                (0..total_angles)
                    .map(|_| real::<T>(rng.gen_range(0.0..std::f64::consts::TAU)))
                    .collect()
            };
            run_start(datum, &dims, &flat, angles, config)
        })
        .collect();
    let runs = runs?;
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.log_value
                .partial_cmp(&b.log_value)
                .unwrap()
                .then(ib.cmp(ia)) // prefer the lower start index on ties
        })
        .map(|(_, r)| r)
        .expect("at least one start");
    let half = real::<T>(0.5);
    Ok(OptimizeReport {
        value: (best.log_value * half).exp(),
        argument: BartheParams {
            lambda: best.lambda.clone(),
            rotations: split_angles(&dims, &best.angles),
        },
        iterations: best.iterations,
        converged: best.converged,
        grad_norm: best.grad_norm,
        starts_used: starts,
    })
}

/// The rank-one constant for raw vectors and exponents: the same inner
/// problem with trivial rotations. Agrees with [`optimize_barthe`] on the
/// equivalent datum.
pub fn rank1_constant<T: Real>(
    vectors: &[Vec<T>],
    p: &[T],
    config: &SolveConfig<T>,
) -> Result<T, SolveError<T>> {
    if vectors.is_empty() || vectors.len() != p.len() {
        return Err(SolveError::Dimension(
            "need one exponent per vector and at least one vector".into(),
        ));
    }
    let n = vectors[0].len();
    let maps = vectors
        .iter()
        .zip(p)
        .map(|(v, &pj)| {
            Ok(crate::datum::DatumMap {
                p: pj,
                matrix: crate::linalg::Mat::from_rows(std::slice::from_ref(v))
                    .map_err(|e| SolveError::Dimension(e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>, SolveError<T>>>()?;
    let datum = BLDatum { n, maps };
    Ok(optimize_barthe(&datum, config)?.value)
}

/// Renders subset weights as CSV with 1-based dash-joined subsets, in the
/// stored (lexicographic) order.
pub fn weights_to_csv<T: Real>(weights: &SubsetWeights<T>) -> String {
    let mut out = String::from("subset,d_I,q_I\n");
    for e in &weights.entries {
        let subset = e
            .subset
            .iter()
            .map(|&k| (k + 1).to_string())
            .collect::<Vec<_>>()
            .join("-");
        out.push_str(&format!("{},{},{}\n", subset, e.d, e.q));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{builtin_datum, Family};

    fn four_linear(a: f64) -> BLDatum<f64> {
        builtin_datum(&Family::FourLinear { a }).unwrap()
    }

    fn identity_rotations(datum: &BLDatum<f64>) -> RotationParams<f64> {
        let dims: Vec<usize> = datum.maps.iter().map(|m| m.target_dim()).collect();
        RotationParams::identity(&dims)
    }

    #[test]
    fn flattening_repeats_exponents_blockwise() {
        let young = builtin_datum::<f64>(&Family::Young { p: [2.0 / 3.0; 3] }).unwrap();
        let flat = flatten_exponents(&young);
        assert_eq!(flat.k, 3);
        assert!(flat.q.iter().all(|&q| (q - 2.0 / 3.0).abs() < 1e-15));

        let lw = builtin_datum::<f64>(&Family::LoomisWhitney { n: 3 }).unwrap();
        let flat = flatten_exponents(&lw);
        assert_eq!(flat.k, 6);
        assert_eq!(flat.index_map[3], (1, 1));

        let mixed = BLDatum {
            n: 2,
            maps: vec![
                crate::datum::DatumMap {
                    p: 0.3,
                    matrix: crate::linalg::Mat::identity(2),
                },
                crate::datum::DatumMap {
                    p: 0.9,
                    matrix: crate::linalg::Mat::from_rows(&[vec![1.0, 0.0]]).unwrap(),
                },
            ],
        };
        let flat = flatten_exponents(&mixed);
        assert_eq!(flat.q, vec![0.3, 0.3, 0.9]);
        assert_eq!(flat.index_map, vec![(0, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn four_linear_weights_match_hand_minors() {
        let weights = compute_dI(&four_linear(1.0), &identity_rotations(&four_linear(1.0))).unwrap();
        let ds: Vec<f64> = weights.entries.iter().map(|e| e.d).collect();
        assert_eq!(ds, vec![1.0, 1.0, 1.0, 1.0, 1.0, 4.0]);
        assert!(weights.entries.iter().all(|e| (e.q - 0.25).abs() < 1e-15));
        assert_eq!(weights.entries[5].subset, vec![2, 3]);
    }

    #[test]
    fn loomis_whitney_weights_pick_one_direction_per_pair() {
        let lw = builtin_datum::<f64>(&Family::LoomisWhitney { n: 3 }).unwrap();
        let weights = compute_dI(&lw, &identity_rotations(&lw)).unwrap();
        assert_eq!(weights.entries.len(), 20);
        let ones = weights.entries.iter().filter(|e| (e.d - 1.0).abs() < 1e-15).count();
        let zeros = weights.entries.iter().filter(|e| e.d.abs() < 1e-15).count();
        assert_eq!((ones, zeros), (8, 12));
    }

    #[test]
    fn identity_rotations_reproduce_raw_rank_one_columns() {
        let datum = four_linear(0.37);
        let weights = compute_dI(&datum, &identity_rotations(&datum)).unwrap();
        // recompute the minors straight from the defining rows
        let rows: Vec<Vec<f64>> = (0..4).map(|j| datum.row_vector(j)).collect();
        for e in &weights.entries {
            let (a, b) = (e.subset[0], e.subset[1]);
            let det = rows[a][0] * rows[b][1] - rows[a][1] * rows[b][0];
            assert!((e.d - det * det).abs() <= 1e-12);
        }
    }

    #[test]
    fn objective_matches_hand_values() {
        let datum = four_linear(1.0);
        let flat = flatten_exponents(&datum);
        let weights = compute_dI(&datum, &identity_rotations(&datum)).unwrap();
        let at = |l: &[f64]| barthe_objective(&weights, &flat, l);
        assert!((at(&[2.0, 2.0, 1.0, 1.0]) - 0.5).abs() < 1e-12);
        assert!((at(&[1.0; 4]) - 4.0 / 9.0).abs() < 1e-12);
        // global scaling leaves the balanced objective unchanged
        let base = at(&[1.3, 0.7, 2.1, 0.4]);
        let scaled = at(&[3.9, 2.1, 6.3, 1.2]);
        assert!((base - scaled).abs() < 1e-10 * base.abs());
    }

    #[test]
    fn lambda_solver_finds_the_four_linear_optimum() {
        let datum = four_linear(1.0);
        let flat = flatten_exponents(&datum);
        let weights = compute_dI(&datum, &identity_rotations(&datum)).unwrap();
        let report = optimize_lambda(&weights, &flat, &SolveConfig::default());
        assert!(matches!(report.status, LambdaStatus::Optimal));
        assert!((report.value - 0.5).abs() < 1e-9);
        // maximizer proportional to (2, 2, 1, 1)
        let l = &report.lambda;
        assert!((l[0] / l[2] - 2.0).abs() < 1e-6);
        assert!((l[1] / l[3] - 2.0).abs() < 1e-6);
        assert!((l[2] - l[3]).abs() < 1e-6 * l[2]);
    }

    #[test]
    fn constant_objective_converges_immediately() {
        let weights: SubsetWeights<f64> = SubsetWeights {
            n: 2,
            k: 2,
            entries: vec![SubsetWeight { subset: vec![0, 1], d: 1.0, q: 1.0 }],
        };
        let flat = FlattenedExponents { k: 2, q: vec![1.0, 1.0], index_map: vec![(0, 0), (1, 0)] };
        let report = optimize_lambda(&weights, &flat, &SolveConfig::default());
        assert!(matches!(report.status, LambdaStatus::Optimal));
        assert!((report.value - 1.0).abs() < 1e-12);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn unbalanced_triple_is_reported_unbounded() {
        let entries = vec![
            SubsetWeight { subset: vec![0, 1], d: 1.0, q: 1.0 },
            SubsetWeight { subset: vec![0, 2], d: 1.0, q: 1.0 },
            SubsetWeight { subset: vec![1, 2], d: 1.0, q: 1.0 },
        ];
        let weights: SubsetWeights<f64> = SubsetWeights { n: 2, k: 3, entries };
        let flat = FlattenedExponents {
            k: 3,
            q: vec![1.0, 1.0, 1.0],
            index_map: vec![(0, 0), (1, 0), (2, 0)],
        };
        let report = optimize_lambda(&weights, &flat, &SolveConfig::default());
        match report.status {
            LambdaStatus::Unbounded(dir) => assert!((dir.gap - 1.0).abs() < 1e-9),
            other => panic!("expected unbounded, got {:?}", other),
        }
        assert!(report.value.is_infinite());
    }

    #[test]
    fn four_linear_constant_from_the_subset_route() {
        let report = optimize_barthe(&four_linear(1.0), &SolveConfig::default()).unwrap();
        assert!((report.value - 0.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(report.starts_used, 1);
        assert!(report.converged);
    }

    #[test]
    fn young_constant_from_the_subset_route() {
        let young: BLDatum<f64> = builtin_datum(&Family::Young { p: [2.0 / 3.0; 3] }).unwrap();
        let report = optimize_barthe(&young, &SolveConfig::default()).unwrap();
        assert!((report.value - 3.0f64.sqrt() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn holder_constant_with_rotation_search() {
        let holder: BLDatum<f64> = builtin_datum(&Family::Holder { m: 2, n: 2 }).unwrap();
        let config = SolveConfig { starts: 4, ..SolveConfig::default() };
        let report = optimize_barthe(&holder, &config).unwrap();
        assert!((report.value - 1.0).abs() < 1e-6);
        assert_eq!(report.starts_used, 4);
    }

    #[test]
    fn infinite_data_surface_certificates() {
        let parallel = BLDatum {
            n: 2,
            maps: vec![
                crate::datum::DatumMap {
                    p: 1.0,
                    matrix: crate::linalg::Mat::from_rows(&[vec![1.0, 0.0]]).unwrap(),
                },
                crate::datum::DatumMap {
                    p: 1.0,
                    matrix: crate::linalg::Mat::from_rows(&[vec![2.0, 0.0]]).unwrap(),
                },
            ],
        };
        match optimize_barthe(&parallel, &SolveConfig::default()) {
            Err(SolveError::Infinite { certificate }) => {
                assert_eq!(certificate, InfinityCertificate::VanishingWeights);
            }
            other => panic!("expected infinity, got {:?}", other.map(|r| r.value)),
        }
    }

    #[test]
    fn rank_one_helper_matches_the_closed_form() {
        let vectors = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
        ];
        let p = vec![0.5; 4];
        let value = rank1_constant(&vectors, &p, &SolveConfig::default()).unwrap();
        assert!((value - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn csv_listing_is_lexicographic_and_one_based() {
        let datum = four_linear(1.0);
        let weights = compute_dI(&datum, &identity_rotations(&datum)).unwrap();
        let csv = weights_to_csv(&weights);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "subset,d_I,q_I");
        assert_eq!(lines[1], "1-2,1,0.25");
        assert_eq!(lines[6], "3-4,4,0.25");
    }
}
