//! Brascamp–Lieb constants from two independent formulations, with
//! finiteness certificates and continuity probes.
//!
//! The library is generic over the scalar type through [`Real`] (implemented
//! for `f32` and `f64`); the aliases at the crate root pin the common
//! double-precision entry points.

// negated comparisons are deliberate NaN guards; the other three are the
// usual numerics patterns (parallel-array loops, generic scalars without
// OpAssign bounds, multi-value solver returns)
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::assign_op_pattern)]
#![allow(clippy::type_complexity)]

pub mod barthe;
pub mod datum;
pub mod finiteness;
pub mod gaussian;
pub mod linalg;
mod lp;
pub mod probe;
pub mod scalar;
pub mod solve;

pub use barthe::{
    barthe_objective, compute_dI, flatten_exponents, optimize_barthe, optimize_lambda,
    rank1_constant, weights_to_csv, BartheParams, FlattenedExponents, LambdaReport, LambdaStatus,
    SubsetWeight, SubsetWeights,
};
pub use datum::{
    builtin_datum, datum_to_json, family_from_name, parse_datum_json, scaling_defect,
    validate_datum, BLDatum, DatumIoError, DatumMap, Family, FamilyError, ValidationReport,
    Violation, ViolationCode,
};
pub use finiteness::{
    candidate_subspaces, decide_finiteness, divergence_certificate, subspace_defect,
    CandidateFamily, DivergenceCheck, DivergenceDirection, FinitenessDiagnostics,
    FinitenessStatus, FinitenessVerdict,
};
pub use gaussian::{fixed_point_step, gaussian_ratio, optimize_lieb, GaussianInput};
pub use probe::{
    four_linear_reference, general_four_linear_reference, holder_exponent_estimate,
    interpolate_datum, one_sided_slopes, sample_at, sample_path, samples_to_csv, HolderEstimate,
    PathSample, ProbeError, SampleOutcome, Slopes,
};
pub use scalar::{real, Real};
pub use solve::{InfinityCertificate, Method, OptimizeReport, SolveConfig, SolveError};

/// Relative singular-value threshold for every rank decision in the crate:
/// singular values at or below this multiple of the largest are treated as
/// zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Double-precision datum.
pub type Datum = BLDatum<f64>;
/// Double-precision solver configuration.
pub type Config = SolveConfig<f64>;
