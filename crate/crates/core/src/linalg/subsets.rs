//! Subset enumeration and determinant expansions of weighted Gram sums.

use super::{det, LinalgError, Mat};
use crate::scalar::Real;
use itertools::Itertools;

/// Largest ground-set size accepted for subset enumeration. `C(20, 10)` is
/// still below 200k subsets; beyond this the expansion is refused rather
/// than silently taking minutes.
pub const MAX_SUBSET_GROUND: usize = 20;

/// Binomial coefficient; saturates are impossible in the supported range.
pub fn binomial(k: usize, n: usize) -> usize {
    if n > k {
        return 0;
    }
    let n = n.min(k - n);
    let mut acc: usize = 1;
    for i in 0..n {
        acc = acc * (k - i) / (i + 1);
    }
    acc
}

/// All `n`-element subsets of `{0, .., k-1}` in lexicographic order.
pub fn subsets_lex(k: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k).combinations(n)
}

/// Expansion of `det(sum_k w_k v_k v_k^T)` over column subsets.
#[derive(Clone, Debug)]
pub struct SubsetExpansion<T> {
    /// Weighted total, equal to the determinant of the Gram sum.
    pub total: T,
    /// Per-subset squared minors `d_I = det((v_k)_{k in I})^2`, unweighted,
    /// paired with the subset indices in lexicographic order.
    pub terms: Vec<(Vec<usize>, T)>,
}

/// Expands `det(sum_k w_k v_k v_k^T)` as `sum_I (prod_{k in I} w_k) d_I`
/// over the size-`n` subsets `I`, where `n` is the ambient dimension.
///
/// The `terms` carry the unweighted squared minors, so callers can reuse one
/// expansion across different weight vectors by recombining externally.
pub fn cauchy_binet_det<T: Real>(
    columns: &[Vec<T>],
    weights: &[T],
) -> Result<SubsetExpansion<T>, LinalgError> {
    if columns.is_empty() || columns[0].is_empty() {
        return Err(LinalgError::Empty);
    }
    let n = columns[0].len();
    let k = columns.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(LinalgError::RaggedRows);
    }
    if k < n {
        return Err(LinalgError::TooFewColumns { k, n });
    }
    if k > MAX_SUBSET_GROUND {
        return Err(LinalgError::TooManyColumns { k, max: MAX_SUBSET_GROUND });
    }
    if weights.len() != k {
        return Err(LinalgError::Dim(format!("{} columns but {} weights", k, weights.len())));
    }
    let mut total = T::zero();
    let mut terms = Vec::with_capacity(binomial(k, n));
    for subset in subsets_lex(k, n) {
        let minor = Mat::from_fn(n, n, |r, c| columns[subset[c]][r]);
        let d = det(&minor);
        let d2 = d * d;
        let w: T = subset.iter().map(|&i| weights[i]).product();
        total = total + w * d2;
        terms.push((subset, d2));
    }
    Ok(SubsetExpansion { total, terms })
}
