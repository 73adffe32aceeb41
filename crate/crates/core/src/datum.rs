//! The core data model: a tuple of surjective linear maps with exponents,
//! validation, built-in example families, and the JSON file format.

use crate::linalg::{rank, Mat};
use crate::scalar::{real, Real};
use crate::RANK_REL_TOL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One map of a datum: an `n_j x n` matrix with its exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct DatumMap<T> {
    /// Exponent in `[0, 1]`.
    pub p: T,
    /// The map, stored as an `n_j x n` matrix acting on row layout.
    pub matrix: Mat<T>,
}

impl<T: Real> DatumMap<T> {
    /// Target dimension `n_j`.
    pub fn target_dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// A datum: ambient dimension `n` together with maps `L_j` and exponents
/// `p_j`. Instances may be syntactically well-formed yet semantically
/// invalid; [`validate_datum`] reports every violation.
#[derive(Clone, Debug, PartialEq)]
pub struct BLDatum<T> {
    /// Ambient dimension.
    pub n: usize,
    /// The maps, in input order.
    pub maps: Vec<DatumMap<T>>,
}

impl<T: Real> BLDatum<T> {
    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    /// True when every target is one-dimensional.
    pub fn is_rank_one(&self) -> bool {
        self.maps.iter().all(|m| m.target_dim() == 1)
    }

    /// The defining row of map `j` for rank-one data.
    pub fn row_vector(&self, j: usize) -> Vec<T> {
        debug_assert_eq!(self.maps[j].target_dim(), 1);
        self.maps[j].matrix.row(0).to_vec()
    }

    /// True when two data can be joined by an entry-wise path: equal `n`,
    /// map count, target dimensions, and exponents.
    pub fn same_signature(&self, other: &Self) -> bool {
        self.n == other.n
            && self.map_count() == other.map_count()
            && self
                .maps
                .iter()
                .zip(&other.maps)
                .all(|(a, b)| a.target_dim() == b.target_dim() && a.p == b.p)
    }
}

/// Machine-readable violation categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationCode {
    /// A map matrix does not have full row rank.
    NotSurjective,
    /// An exponent lies outside `[0, 1]` (checked exactly, no tolerance).
    ExponentOutOfRange,
    /// A matrix has the wrong column count or an empty/oversized target.
    BadShape,
    /// The datum has no maps at all.
    EmptyDatum,
    /// A matrix entry or exponent is NaN or infinite.
    NonFinite,
}

impl std::fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ViolationCode::NotSurjective => "not-surjective",
            ViolationCode::ExponentOutOfRange => "exponent-out-of-range",
            ViolationCode::BadShape => "bad-shape",
            ViolationCode::EmptyDatum => "empty-datum",
            ViolationCode::NonFinite => "non-finite",
        };
        f.write_str(s)
    }
}

/// One violated invariant, tied to a map index where applicable.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub map_index: Option<usize>,
    pub message: String,
}

/// Everything wrong with a candidate datum; `ok` iff nothing is.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v.map_index {
                Some(j) => write!(f, "map {}: [{}] {}", j, v.code, v.message)?,
                None => write!(f, "[{}] {}", v.code, v.message)?,
            }
        }
        Ok(())
    }
}

/// Checks every datum invariant and reports all violations: exponent range
/// (exact comparison), target dimensions, column counts, finiteness of
/// entries, and surjectivity via numerical rank.
pub fn validate_datum<T: Real>(datum: &BLDatum<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |code, map_index, message: String| {
        violations.push(Violation { code, map_index, message });
    };
    if datum.n == 0 {
        push(ViolationCode::BadShape, None, "ambient dimension must be positive".into());
    }
    if datum.maps.is_empty() {
        push(ViolationCode::EmptyDatum, None, "datum needs at least one map".into());
    }
    for (j, m) in datum.maps.iter().enumerate() {
        let nj = m.target_dim();
        if !m.p.is_finite() {
            push(ViolationCode::NonFinite, Some(j), "exponent is not finite".into());
        } else if m.p < T::zero() || m.p > T::one() {
            push(
                ViolationCode::ExponentOutOfRange,
                Some(j),
                format!("exponent {} outside [0, 1]", m.p),
            );
        }
        if m.matrix.cols() != datum.n {
            push(
                ViolationCode::BadShape,
                Some(j),
                format!("matrix has {} columns, ambient dimension is {}", m.matrix.cols(), datum.n),
            );
        }
        if nj > datum.n {
            push(
                ViolationCode::BadShape,
                Some(j),
                format!("target dimension {} exceeds ambient dimension {}", nj, datum.n),
            );
        }
        if !m.matrix.has_finite_entries() {
            push(ViolationCode::NonFinite, Some(j), "matrix has non-finite entries".into());
            continue;
        }
        if rank(&m.matrix, real::<T>(RANK_REL_TOL)) < nj {
            push(
                ViolationCode::NotSurjective,
                Some(j),
                format!("matrix rank below target dimension {}", nj),
            );
        }
    }
    ValidationReport { violations }
}

/// The scaling defect `sum_j p_j n_j - n`; zero is necessary for a finite
/// constant.
pub fn scaling_defect<T: Real>(datum: &BLDatum<T>) -> T {
    let weighted: T = datum.maps.iter().map(|m| m.p * real::<T>(m.target_dim() as f64)).sum();
    weighted - real::<T>(datum.n as f64)
}

/// Built-in example families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family<T> {
    /// `m` identity maps on dimension `n` with equal exponents `1/m`.
    Holder { m: usize, n: usize },
    /// `n` coordinate-deletion projections with exponents `1/(n-1)`.
    LoomisWhitney { n: usize },
    /// Rows `(1,0), (0,1), (1,-1)` with the given exponents.
    Young { p: [T; 3] },
    /// Rows `(1,0), (0,1), (1,-1), (1,a)` with exponents `1/2`.
    FourLinear { a: T },
}

/// Errors constructing a built-in family.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("family needs {0}")]
    BadParams(String),
    #[error("unknown family name `{0}`")]
    UnknownName(String),
}

/// Builds the canonical datum of a built-in family.
pub fn builtin_datum<T: Real>(family: &Family<T>) -> Result<BLDatum<T>, FamilyError> {
    match family {
        Family::Holder { m, n } => {
            if *m == 0 || *n == 0 {
                return Err(FamilyError::BadParams("positive map count and dimension".into()));
            }
            let p = T::one() / real::<T>(*m as f64);
            let maps = (0..*m).map(|_| DatumMap { p, matrix: Mat::identity(*n) }).collect();
            Ok(BLDatum { n: *n, maps })
        }
        Family::LoomisWhitney { n } => {
            if *n < 2 {
                return Err(FamilyError::BadParams("dimension at least 2".into()));
            }
            let p = T::one() / real::<T>((*n - 1) as f64);
            let maps = (0..*n)
                .map(|drop| {
                    let matrix = Mat::from_fn(*n - 1, *n, |r, c| {
                        let keep = if r < drop { r } else { r + 1 };
                        if c == keep {
                            T::one()
                        } else {
                            T::zero()
                        }
                    });
                    DatumMap { p, matrix }
                })
                .collect();
            Ok(BLDatum { n: *n, maps })
        }
        Family::Young { p } => {
            let rows: [[f64; 2]; 3] = [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]];
            let maps = rows
                .iter()
                .zip(p)
                .map(|(row, &pj)| DatumMap {
                    p: pj,
                    matrix: Mat::from_rows(&[row.iter().map(|&x| real::<T>(x)).collect()])
                        .expect("fixed shape"),
                })
                .collect();
            Ok(BLDatum { n: 2, maps })
        }
        Family::FourLinear { a } => {
            if !a.is_finite() {
                return Err(FamilyError::BadParams("a finite parameter".into()));
            }
            let half = real::<T>(0.5);
            let rows: [[T; 2]; 4] = [
                [T::one(), T::zero()],
                [T::zero(), T::one()],
                [T::one(), -T::one()],
                [T::one(), *a],
            ];
            let maps = rows
                .iter()
                .map(|row| DatumMap {
                    p: half,
                    matrix: Mat::from_rows(&[row.to_vec()]).expect("fixed shape"),
                })
                .collect();
            Ok(BLDatum { n: 2, maps })
        }
    }
}

/// Parses a family from `NAME[:ARGS]` with comma-separated arguments:
/// `holder[:M,N]` (default 2,2), `loomis-whitney[:N]` (default 3),
/// `young[:P1,P2,P3]` (default 2/3 each), `four-linear[:A]` (default 1).
pub fn family_from_name<T: Real>(spec: &str) -> Result<Family<T>, FamilyError> {
    fn int(s: &str) -> Result<usize, FamilyError> {
        s.trim()
            .parse()
            .map_err(|_| FamilyError::BadParams(format!("an integer, got `{}`", s.trim())))
    }
    fn num<T: Real>(s: &str) -> Result<T, FamilyError> {
        s.trim()
            .parse::<f64>()
            .map(real::<T>)
            .map_err(|_| FamilyError::BadParams(format!("a number, got `{}`", s.trim())))
    }
    let (head, tail) = match spec.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (spec, None),
    };
    let args: Vec<&str> = tail.map(|t| t.split(',').collect()).unwrap_or_default();
    match head {
        "holder" => match args.as_slice() {
            [] => Ok(Family::Holder { m: 2, n: 2 }),
            [m, n] => Ok(Family::Holder { m: int(m)?, n: int(n)? }),
            _ => Err(FamilyError::BadParams("holder takes M,N".into())),
        },
        "loomis-whitney" => match args.as_slice() {
            [] => Ok(Family::LoomisWhitney { n: 3 }),
            [n] => Ok(Family::LoomisWhitney { n: int(n)? }),
            _ => Err(FamilyError::BadParams("loomis-whitney takes N".into())),
        },
        "young" => match args.as_slice() {
            [] => {
                let p = real::<T>(2.0) / real::<T>(3.0);
                Ok(Family::Young { p: [p; 3] })
            }
            [a, b, c] => Ok(Family::Young { p: [num(a)?, num(b)?, num(c)?] }),
            _ => Err(FamilyError::BadParams("young takes P1,P2,P3".into())),
        },
        "four-linear" => match args.as_slice() {
            [] => Ok(Family::FourLinear { a: T::one() }),
            [a] => Ok(Family::FourLinear { a: num(a)? }),
            _ => Err(FamilyError::BadParams("four-linear takes A".into())),
        },
        other => Err(FamilyError::UnknownName(other.into())),
    }
}

/// Errors reading or writing datum files.
#[derive(Debug, Error)]
pub enum DatumIoError {
    #[error("JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("structural error: {0}")]
    Structure(String),
}

#[derive(Serialize, Deserialize)]
struct DatumFile {
    n: usize,
    maps: Vec<MapFile>,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    p: f64,
    matrix: Vec<Vec<f64>>,
}

/// Parses the JSON datum format
/// `{"n": int, "maps": [{"p": number, "matrix": [[number, ..], ..]}, ..]}`.
///
/// Only structure is checked here (valid JSON, rectangular matrices);
/// semantic validation is a separate step so violations can be reported in
/// full rather than failing on the first.
pub fn parse_datum_json<T: Real>(text: &str) -> Result<BLDatum<T>, DatumIoError> {
    let file: DatumFile = serde_json::from_str(text)?;
    let mut maps = Vec::with_capacity(file.maps.len());
    for (j, m) in file.maps.iter().enumerate() {
        let rows: Vec<Vec<T>> =
            m.matrix.iter().map(|r| r.iter().map(|&x| real::<T>(x)).collect()).collect();
        let matrix = Mat::from_rows(&rows)
            .map_err(|e| DatumIoError::Structure(format!("map {}: {}", j, e)))?;
        maps.push(DatumMap { p: real::<T>(m.p), matrix });
    }
    Ok(BLDatum { n: file.n, maps })
}

/// Serializes a datum to the JSON file format. Numbers are written with
/// shortest round-trip precision, so parsing the output reproduces the datum
/// bit for bit.
pub fn datum_to_json<T: Real>(datum: &BLDatum<T>) -> String {
    let file = DatumFile {
        n: datum.n,
        maps: datum
            .maps
            .iter()
            .map(|m| MapFile {
                p: m.p.to_f64().expect("finite exponent"),
                matrix: m
                    .matrix
                    .to_rows()
                    .iter()
                    .map(|r| r.iter().map(|x| x.to_f64().expect("finite entry")).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("serialization of plain structs cannot fail")
}
