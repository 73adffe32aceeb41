//! Types shared by the two optimization routes: configuration, reports,
//! method selection, and the error/certificate vocabulary.

use crate::datum::{BLDatum, ValidationReport};
use crate::scalar::{real, Real};
use thiserror::Error;

/// Multi-start solver configuration. All randomness derives from `seed`;
/// start `i` uses the stream `seed ^ i`, so results are reproducible and
/// independent of scheduling.
#[derive(Clone, Copy, Debug)]
pub struct SolveConfig<T> {
    /// Number of independent starts.
    pub starts: usize,
    /// Iteration budget per start.
    pub max_iter: usize,
    /// Gradient max-norm at which a start declares convergence.
    pub tol: T,
    /// Base seed for start generation.
    pub seed: u64,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        SolveConfig { starts: 8, max_iter: 5000, tol: real::<T>(1e-8), seed: 0 }
    }
}

/// Which formulation computes the constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Gaussian-ratio maximization.
    Lieb,
    /// Weighted-subset (scaling/rotation) maximization.
    Barthe,
    /// Subset route when the flattened index count is small, gaussian route
    /// otherwise.
    Auto,
}

impl Method {
    /// Resolves `Auto` for a concrete datum: the subset route is preferred
    /// up to `K = 12` flattened indices, beyond which its `C(K, n)` terms
    /// outgrow the gaussian route.
    pub fn resolve<T: Real>(self, datum: &BLDatum<T>) -> Method {
        match self {
            Method::Auto => {
                let k: usize = datum.maps.iter().map(|m| m.target_dim()).sum();
                if k <= 12 {
                    Method::Barthe
                } else {
                    Method::Lieb
                }
            }
            other => other,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lieb" => Ok(Method::Lieb),
            "barthe" => Ok(Method::Barthe),
            "auto" => Ok(Method::Auto),
            other => Err(format!("unknown method `{}` (expected lieb, barthe, or auto)", other)),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Lieb => "lieb",
            Method::Barthe => "barthe",
            Method::Auto => "auto",
        })
    }
}

/// Result of a multi-start maximization. `argument` is the best maximizer
/// found, in the chart native to the route that produced the report.
#[derive(Clone, Debug)]
pub struct OptimizeReport<A, T> {
    /// Best value found (the constant itself, not its square).
    pub value: T,
    /// The maximizing argument.
    pub argument: A,
    /// Iterations used by the winning start.
    pub iterations: usize,
    /// Whether the winning start met the gradient tolerance.
    pub converged: bool,
    /// Gradient max-norm at exit of the winning start.
    pub grad_norm: T,
    /// Number of starts that ran.
    pub starts_used: usize,
}

/// A proof object for an infinite constant.
#[derive(Clone, Debug, PartialEq)]
pub enum InfinityCertificate<T> {
    /// The scaling balance `sum p_j n_j - n` is nonzero.
    ScalingDefect { defect: T },
    /// A subspace whose dimension exceeds its exponent-weighted image
    /// dimensions; `defect` is that excess, recomputable from the basis.
    Subspace { basis: Vec<Vec<T>>, defect: T },
    /// A log-scaling direction along which the subset objective grows
    /// without bound; `gap` is the certified growth rate per unit step.
    Divergence { direction: Vec<T>, gap: T },
    /// Every subset weight vanishes, so the objective has no finite value
    /// anywhere.
    VanishingWeights,
}

impl<T: Real> std::fmt::Display for InfinityCertificate<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfinityCertificate::ScalingDefect { defect } => {
                write!(f, "scaling defect {} is nonzero", defect)
            }
            InfinityCertificate::Subspace { basis, defect } => {
                writeln!(f, "subspace with defect {} spanned by:", defect)?;
                for v in basis {
                    writeln!(f, "  {:?}", v)?;
                }
                Ok(())
            }
            InfinityCertificate::Divergence { direction, gap } => {
                write!(f, "divergent scaling direction {:?} with gap {}", direction, gap)
            }
            InfinityCertificate::VanishingWeights => {
                write!(f, "all subset weights vanish; objective identically infinite")
            }
        }
    }
}

/// Errors across the solver stack.
#[derive(Debug, Error)]
pub enum SolveError<T: Real> {
    /// A semantically invalid datum was supplied.
    #[error("invalid datum:\n{0}")]
    InvalidDatum(ValidationReport),
    /// The constant is provably infinite; carries the certificate.
    #[error("constant is infinite: {certificate}")]
    Infinite { certificate: InfinityCertificate<T> },
    /// The gaussian denominator matrix is singular to working precision.
    #[error("degenerate denominator matrix; singular values {spectrum:?}")]
    DegenerateDenominator { spectrum: Vec<T> },
    /// A dimension precondition failed.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// The request exceeds a documented structural limit.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A fixed-point step could not be formed.
    #[error("step failure: {0}")]
    StepFailure(String),
    /// Ascent blew past the divergence guard without a finiteness
    /// certificate; cross-check the finiteness diagnostics.
    #[error("apparently unbounded: ratio exceeded {value} during ascent; \
             cross-check finiteness diagnostics")]
    ApparentlyUnbounded { value: T },
}
