//! Continuity and differentiability experiments: closed-form references for
//! the four-linear family, sampling of the constant along straight-line
//! datum paths, one-sided slopes, and a local Hölder-exponent estimator.
//! Everything here is empirical instrumentation; nothing feeds back into
//! the solvers.

use crate::barthe::optimize_barthe;
use crate::datum::BLDatum;
use crate::gaussian::optimize_lieb;
use crate::linalg::Mat;
use crate::scalar::{real, Real};
use crate::solve::{InfinityCertificate, Method, SolveConfig, SolveError};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

/// Differences below this are considered flat for exponent estimation.
const FLAT_TOL: f64 = 1e-12;

/// Errors from the probing layer.
#[derive(Debug, Error)]
pub enum ProbeError<T: Real> {
    #[error(transparent)]
    Solve(#[from] SolveError<T>),
    /// A slope stencil point came out infinite or failed.
    #[error("non-finite value in the slope stencil at t = {t}")]
    InfiniteStencil { t: T },
    /// Too few usable samples for the requested estimate.
    #[error("need at least {needed} finite samples near the base point, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },
    /// No finite sample at the estimator's base point.
    #[error("no finite sample at the base point t0 = {t0}")]
    MissingBase { t0: T },
}

/// Closed-form constant for the four-linear family with rows `(1,0)`,
/// `(0,1)`, `(1,-1)`, `(1,a)` and exponents `1/2`.
///
/// Evaluates both equivalent forms, `min(1, |a|^{-1/2}, |a+1|^{-1/2})` and
/// `(2 / (|a| + |a+1| + 1))^{1/2}`, asserts they agree to 1e-12, and
/// returns the value. Valid at every real `a`, including the kinks at `0`
/// and `-1`.
pub fn four_linear_reference<T: Real>(a: T) -> T {
    let one = T::one();
    let min_form = one
        .min(a.abs().powf(-real::<T>(0.5)))
        .min((a + one).abs().powf(-real::<T>(0.5)));
    let sum_form = (real::<T>(2.0) / (a.abs() + (a + one).abs() + one)).sqrt();
    assert!(
        (min_form - sum_form).abs() <= real::<T>(1e-12),
        "closed forms disagree at a = {}: {} vs {}",
        a,
        min_form,
        sum_form
    );
    sum_form
}

/// Closed-form constant for four arbitrary vectors in the plane with
/// exponents `1/2`: the squared constant is `2` over the sum of the three
/// pairing products `|det(v_i v_j) det(v_k v_l)|`. Returns infinity when
/// all three products vanish.
pub fn general_four_linear_reference<T: Real>(v: &[Vec<T>; 4]) -> T {
    let det = |a: &[T], b: &[T]| a[0] * b[1] - a[1] * b[0];
    let pairings = (det(&v[0], &v[1]) * det(&v[2], &v[3])).abs()
        + (det(&v[0], &v[2]) * det(&v[1], &v[3])).abs()
        + (det(&v[0], &v[3]) * det(&v[1], &v[2])).abs();
    if pairings <= T::zero() {
        return T::infinity();
    }
    (real::<T>(2.0) / pairings).sqrt()
}

/// What a single path sample produced.
#[derive(Clone, Debug)]
pub enum SampleOutcome<T> {
    Finite { value: T },
    /// The constant is infinite; the certificate says why.
    Infinite { certificate: InfinityCertificate<T> },
    /// The solver failed without a verdict (recorded, not fatal).
    Failed { message: String },
}

/// One point of a path run. `method` is the resolved method that actually
/// ran (never `auto`).
#[derive(Clone, Debug)]
pub struct PathSample<T> {
    pub t: T,
    pub outcome: SampleOutcome<T>,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    /// Wall-clock seconds spent on this sample.
    pub seconds: f64,
}

impl<T: Real> PathSample<T> {
    /// The finite value, if there is one.
    pub fn value(&self) -> Option<T> {
        match &self.outcome {
            SampleOutcome::Finite { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.outcome, SampleOutcome::Infinite { .. })
    }
}

/// The entry-wise straight line between two data at parameter `t`;
/// exponents and shapes come from the first endpoint.
pub fn interpolate_datum<T: Real>(a: &BLDatum<T>, b: &BLDatum<T>, t: T) -> BLDatum<T> {
    let s = T::one() - t;
    let maps = a
        .maps
        .iter()
        .zip(&b.maps)
        .map(|(ma, mb)| crate::datum::DatumMap {
            p: ma.p,
            matrix: Mat::from_fn(ma.matrix.rows(), ma.matrix.cols(), |r, c| {
                s * ma.matrix[(r, c)] + t * mb.matrix[(r, c)]
            }),
        })
        .collect();
    BLDatum { n: a.n, maps }
}

/// Solves one interpolated point and records the outcome with timing. The
/// endpoints must share a signature (checked by [`sample_path`], assumed
/// here).
pub fn sample_at<T: Real>(
    datum_a: &BLDatum<T>,
    datum_b: &BLDatum<T>,
    t: T,
    method: Method,
    config: &SolveConfig<T>,
) -> PathSample<T> {
    let datum = interpolate_datum(datum_a, datum_b, t);
    let resolved = method.resolve(&datum);
    let clock = Instant::now();
    let solved = match resolved {
        Method::Barthe => {
            optimize_barthe(&datum, config).map(|r| (r.value, r.converged, r.iterations))
        }
        Method::Lieb => optimize_lieb(&datum, config).map(|r| (r.value, r.converged, r.iterations)),
        Method::Auto => unreachable!("resolve never returns auto"),
    };
    let seconds = clock.elapsed().as_secs_f64();
    match solved {
        Ok((value, converged, iterations)) => PathSample {
            t,
            outcome: SampleOutcome::Finite { value },
            method: resolved,
            converged,
            iterations,
            seconds,
        },
        Err(SolveError::Infinite { certificate }) => PathSample {
            t,
            outcome: SampleOutcome::Infinite { certificate },
            method: resolved,
            converged: true,
            iterations: 0,
            seconds,
        },
        Err(other) => PathSample {
            t,
            outcome: SampleOutcome::Failed { message: other.to_string() },
            method: resolved,
            converged: false,
            iterations: 0,
            seconds,
        },
    }
}

/// Samples the constant along the straight line from `datum_a` to
/// `datum_b` at `grid` evenly spaced parameters `t = i / (grid - 1)`.
/// Samples run concurrently; the output is ordered by `t`. Per-sample
/// solver failures are recorded in the sample rather than aborting the
/// run.
pub fn sample_path<T: Real>(
    datum_a: &BLDatum<T>,
    datum_b: &BLDatum<T>,
    grid: usize,
    method: Method,
    config: &SolveConfig<T>,
) -> Result<Vec<PathSample<T>>, ProbeError<T>> {
    if !datum_a.same_signature(datum_b) {
        return Err(SolveError::Dimension(
            "path endpoints must share dimensions and exponents".into(),
        )
        .into());
    }
    if grid < 2 {
        return Err(SolveError::Dimension("a path needs a grid of at least 2".into()).into());
    }
    let denom = real::<T>((grid - 1) as f64);
    Ok((0..grid)
        .into_par_iter()
        .map(|i| {
            let t = real::<T>(i as f64) / denom;
            sample_at(datum_a, datum_b, t, method, config)
        })
        .collect())
}

/// One-sided difference quotients at `t0`.
#[derive(Clone, Copy, Debug)]
pub struct Slopes<T> {
    pub left: T,
    pub right: T,
}

fn finite_value_near<T: Real>(
    samples: &[PathSample<T>],
    target: T,
    resample: &mut impl FnMut(T) -> PathSample<T>,
) -> Result<T, ProbeError<T>> {
    let close = real::<T>(1e-9) * (T::one() + target.abs());
    let found = samples.iter().find(|s| (s.t - target).abs() <= close);
    let sample;
    let s = match found {
        Some(s) => s,
        None => {
            sample = resample(target);
            &sample
        }
    };
    s.value().ok_or(ProbeError::InfiniteStencil { t: target })
}

/// Backward and forward difference quotients of the sampled value at `t0`
/// with step `h`. Stencil points absent from `samples` are recomputed via
/// `resample`; an infinite or failed stencil point is an error.
pub fn one_sided_slopes<T: Real>(
    samples: &[PathSample<T>],
    t0: T,
    h: T,
    mut resample: impl FnMut(T) -> PathSample<T>,
) -> Result<Slopes<T>, ProbeError<T>> {
    let center = finite_value_near(samples, t0, &mut resample)?;
    let before = finite_value_near(samples, t0 - h, &mut resample)?;
    let after = finite_value_near(samples, t0 + h, &mut resample)?;
    Ok(Slopes { left: (center - before) / h, right: (after - center) / h })
}

/// Outcome of the local Hölder-exponent estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum HolderEstimate<T> {
    /// Least-squares slope of `log |value(t) - value(t0)|` against
    /// `log |t - t0|`, with the root-mean-square fit residual.
    Exponent { alpha: T, residual: T },
    /// Some difference fell below 1e-12; the function is flat to tolerance
    /// there and the estimate reads as "at least 1".
    FlatToTolerance,
}

/// Estimates a local Hölder exponent at `t0` from nearby samples, ideally
/// at geometric steps `h, h/2, ...`. Diagnostic only: a log-log
/// least-squares fit with no error control. Needs the base sample and at
/// least 6 finite samples at distinct offsets.
pub fn holder_exponent_estimate<T: Real>(
    samples: &[PathSample<T>],
    t0: T,
) -> Result<HolderEstimate<T>, ProbeError<T>> {
    let close = real::<T>(1e-12);
    let base = samples
        .iter()
        .find(|s| (s.t - t0).abs() <= close)
        .and_then(|s| s.value())
        .ok_or(ProbeError::MissingBase { t0 })?;
    let mut points = Vec::new();
    let mut flat = false;
    for s in samples {
        let h = (s.t - t0).abs();
        if h <= close {
            continue;
        }
        if let Some(v) = s.value() {
            let diff = (v - base).abs();
            if diff < real::<T>(FLAT_TOL) {
                flat = true;
            } else {
                points.push((h.ln(), diff.ln()));
            }
        }
    }
    if flat {
        return Ok(HolderEstimate::FlatToTolerance);
    }
    if points.len() < 6 {
        return Err(ProbeError::NotEnoughSamples { needed: 6, got: points.len() });
    }
    let count = real::<T>(points.len() as f64);
    let mean_x = points.iter().map(|p| p.0).sum::<T>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<T>() / count;
    let var: T = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let cov: T = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let alpha = cov / var;
    let intercept = mean_y - alpha * mean_x;
    let residual = (points
        .iter()
        .map(|p| {
            let r = p.1 - (alpha * p.0 + intercept);
            r * r
        })
        .sum::<T>()
        / count)
        .sqrt();
    Ok(HolderEstimate::Exponent { alpha, residual })
}

/// Renders samples as CSV. Infinite and failed samples leave the value
/// column empty; the `infinite` column is 1 only for certified infinities,
/// so divergence is never conflated with overflow or failure.
pub fn samples_to_csv<T: Real>(samples: &[PathSample<T>]) -> String {
    let mut out = String::from("t,value,infinite,method,converged,iterations,seconds\n");
    for s in samples {
        let value = s.value().map(|v| format!("{}", v)).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            s.t,
            value,
            if s.is_infinite() { 1 } else { 0 },
            s.method,
            s.converged,
            s.iterations,
            s.seconds
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{builtin_datum, Family};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn four_linear(a: f64) -> BLDatum<f64> {
        builtin_datum(&Family::FourLinear { a }).unwrap()
    }

    #[test]
    fn reference_values_at_marked_points() {
        assert!((four_linear_reference(1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((four_linear_reference(-0.5f64) - 1.0).abs() < 1e-15);
        assert!((four_linear_reference(-3.0) - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reference_forms_agree_on_random_draws() {
        // the assertion inside the function is the check
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            four_linear_reference(rng.gen_range(-5.0..5.0));
        }
    }

    #[test]
    fn general_reference_on_hand_cases() {
        let v = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]];
        assert!((general_four_linear_reference(&v) - 0.5f64.sqrt()).abs() < 1e-15);
        let parallel: [Vec<f64>; 4] =
            [vec![1.0, 0.0], vec![2.0, 0.0], vec![-1.0, 0.0], vec![0.5, 0.0]];
        assert!(general_four_linear_reference(&parallel).is_infinite());
        let repeated: [Vec<f64>; 4] =
            [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((general_four_linear_reference(&repeated) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn general_reference_extends_the_family_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let v = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, -1.0], vec![1.0, a]];
            let general = general_four_linear_reference(&v);
            assert!((general - four_linear_reference(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn path_samples_track_the_reference() {
        let samples = sample_path(
            &four_linear(0.0),
            &four_linear(1.0),
            11,
            Method::Auto,
            &SolveConfig::default(),
        )
        .unwrap();
        assert_eq!(samples.len(), 11);
        for (i, s) in samples.iter().enumerate() {
            assert!((s.t - i as f64 / 10.0).abs() < 1e-15);
            let v = s.value().expect("family stays finite");
            assert!((v - four_linear_reference(s.t)).abs() < 1e-3, "t = {}: {}", s.t, v);
            assert_eq!(s.method, Method::Barthe);
        }
    }

    #[test]
    fn constant_paths_are_flat() {
        let d = four_linear(0.5);
        let samples = sample_path(&d, &d, 5, Method::Auto, &SolveConfig::default()).unwrap();
        let v0 = samples[0].value().unwrap();
        for s in &samples {
            assert!((s.value().unwrap() - v0).abs() < 1e-9);
        }
    }

    #[test]
    fn paths_into_degeneracy_blow_up() {
        let mut parallel = four_linear(1.0);
        for m in &mut parallel.maps {
            m.matrix = Mat::from_rows(&[vec![1.0, 0.0]]).unwrap();
        }
        let samples = sample_path(
            &four_linear(1.0),
            &parallel,
            11,
            Method::Barthe,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!(samples.last().unwrap().is_infinite());
        let finite: Vec<f64> = samples.iter().filter_map(|s| s.value()).collect();
        assert!(finite.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(*finite.last().unwrap() > 3.0 * finite[0]);
    }

    #[test]
    fn incompatible_endpoints_are_rejected() {
        let young = builtin_datum::<f64>(&Family::Young { p: [2.0 / 3.0; 3] }).unwrap();
        let err = sample_path(
            &four_linear(0.0),
            &young,
            5,
            Method::Auto,
            &SolveConfig::default(),
        );
        assert!(matches!(err, Err(ProbeError::Solve(SolveError::Dimension(_)))));
    }

    #[test]
    fn slopes_on_a_smooth_stretch() {
        // a(t) = t - 0.5 along this path; at t0 = 0.5 the reference is
        // smooth in a around... a = 0 is the kink, so probe at a = 1
        let a0 = four_linear(0.5);
        let a1 = four_linear(1.5);
        let config = SolveConfig::default();
        let resample = |t: f64| sample_at(&a0, &a1, t, Method::Barthe, &config);
        let slopes = one_sided_slopes(&[], 0.5, 1e-3, resample).unwrap();
        // d/da (1+a)^{-1/2} at a = 1 is -2^{-1/2}/4
        let expected = -0.5f64.sqrt() / 4.0;
        assert!((slopes.left - expected).abs() < 0.05);
        assert!((slopes.right - expected).abs() < 0.05);
    }

    #[test]
    fn slopes_error_on_infinite_stencils() {
        let sample = PathSample {
            t: 0.5,
            outcome: SampleOutcome::Infinite {
                certificate: InfinityCertificate::VanishingWeights,
            },
            method: Method::Barthe,
            converged: true,
            iterations: 0,
            seconds: 0.0,
        };
        let err = one_sided_slopes(&[sample], 0.5, 1e-3, |t| PathSample {
            t,
            outcome: SampleOutcome::Finite { value: 1.0 },
            method: Method::Barthe,
            converged: true,
            iterations: 0,
            seconds: 0.0,
        });
        assert!(matches!(err, Err(ProbeError::InfiniteStencil { .. })));
    }

    fn synthetic_samples(f: impl Fn(f64) -> f64, t0: f64, steps: usize) -> Vec<PathSample<f64>> {
        let mut samples = vec![PathSample {
            t: t0,
            outcome: SampleOutcome::Finite { value: f(t0) },
            method: Method::Barthe,
            converged: true,
            iterations: 0,
            seconds: 0.0,
        }];
        let mut h = 0.1;
        for _ in 0..steps {
            samples.push(PathSample {
                t: t0 + h,
                outcome: SampleOutcome::Finite { value: f(t0 + h) },
                method: Method::Barthe,
                converged: true,
                iterations: 0,
                seconds: 0.0,
            });
            h /= 2.0;
        }
        samples
    }

    #[test]
    fn exponent_estimates_on_synthetic_data() {
        let lipschitz = synthetic_samples(|t| (1.0 + t).sqrt(), 0.2, 8);
        match holder_exponent_estimate(&lipschitz, 0.2).unwrap() {
            HolderEstimate::Exponent { alpha, .. } => assert!((alpha - 1.0).abs() < 0.1),
            other => panic!("expected an exponent, got {:?}", other),
        }
        let sqrt_kink = synthetic_samples(|t| t.abs().sqrt(), 0.0, 8);
        match holder_exponent_estimate(&sqrt_kink, 0.0).unwrap() {
            HolderEstimate::Exponent { alpha, residual } => {
                assert!((alpha - 0.5).abs() < 0.05);
                assert!(residual < 0.05);
            }
            other => panic!("expected an exponent, got {:?}", other),
        }
        let constant = synthetic_samples(|_| 1.0, 0.0, 8);
        assert_eq!(holder_exponent_estimate(&constant, 0.0).unwrap(), HolderEstimate::FlatToTolerance);
        let sparse = synthetic_samples(|t| t, 0.0, 3);
        assert!(matches!(
            holder_exponent_estimate(&sparse, 0.0),
            Err(ProbeError::NotEnoughSamples { needed: 6, .. })
        ));
    }

    #[test]
    fn exponent_estimate_on_solver_output() {
        // smooth point of the family: a = 0.5 at t0 = 0.5 along a(t) = t
        let a0 = four_linear(0.0);
        let a1 = four_linear(1.0);
        let config = SolveConfig::default();
        let t0 = 0.5;
        let mut samples = vec![sample_at(&a0, &a1, t0, Method::Barthe, &config)];
        let mut h = 0.05;
        for _ in 0..7 {
            samples.push(sample_at(&a0, &a1, t0 + h, Method::Barthe, &config));
            h /= 2.0;
        }
        match holder_exponent_estimate(&samples, t0).unwrap() {
            HolderEstimate::Exponent { alpha, .. } => {
                assert!((alpha - 1.0).abs() < 0.2, "alpha = {}", alpha)
            }
            other => panic!("expected an exponent, got {:?}", other),
        }
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let samples = vec![
            PathSample {
                t: 0.0,
                outcome: SampleOutcome::Finite { value: 0.75 },
                method: Method::Barthe,
                converged: true,
                iterations: 4,
                seconds: 0.25,
            },
            PathSample {
                t: 1.0,
                outcome: SampleOutcome::Infinite {
                    certificate: InfinityCertificate::VanishingWeights,
                },
                method: Method::Lieb,
                converged: true,
                iterations: 0,
                seconds: 0.5,
            },
        ];
        let csv = samples_to_csv(&samples);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,value,infinite,method,converged,iterations,seconds");
        assert_eq!(lines[1], "0,0.75,0,barthe,true,4,0.250000");
        assert_eq!(lines[2], "1,,1,lieb,true,0,0.500000");
    }
}
