//! A small dense simplex solver for `max c.x  s.t.  A x <= b, x >= 0`
//! with `b >= 0`, so the slack basis is immediately feasible. Bland's rule
//! keeps the method from cycling on the degenerate (`b = 0`) constraints
//! that the divergence certificate produces.

use crate::scalar::{real, Real};

pub(crate) struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
}

pub(crate) enum LpOutcome<T> {
    Optimal(LpSolution<T>),
    Unbounded,
    /// Iteration guard tripped; callers must treat this as "no answer".
    Stalled,
}

pub(crate) fn simplex_max<T: Real>(c: &[T], a: &[Vec<T>], b: &[T], max_iter: usize) -> LpOutcome<T> {
    let nvars = c.len();
    let mcons = a.len();
    debug_assert_eq!(b.len(), mcons);
    debug_assert!(b.iter().all(|&bi| bi >= T::zero()), "simplex needs b >= 0");
    let width = nvars + mcons + 1;
    let tol = T::epsilon() * real::<T>(256.0);

    // rows 0..mcons: [A | I | b]; last row: [-c | 0 | 0]
    let mut t: Vec<Vec<T>> = Vec::with_capacity(mcons + 1);
    for (r, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), nvars);
        let mut line = vec![T::zero(); width];
        line[..nvars].copy_from_slice(row);
        line[nvars + r] = T::one();
        line[width - 1] = b[r];
        t.push(line);
    }
    let mut obj = vec![T::zero(); width];
    for (j, &cj) in c.iter().enumerate() {
        obj[j] = -cj;
    }
    t.push(obj);
    let mut basis: Vec<usize> = (0..mcons).map(|r| nvars + r).collect();

    for _ in 0..max_iter {
        // Bland: entering variable is the lowest index with negative reduced cost
        let enter = match (0..nvars + mcons).find(|&j| t[mcons][j] < -tol) {
            Some(j) => j,
            None => {
                let mut x = vec![T::zero(); nvars];
                for (r, &bv) in basis.iter().enumerate() {
                    if bv < nvars {
                        x[bv] = t[r][width - 1];
                    }
                }
                return LpOutcome::Optimal(LpSolution { x, objective: t[mcons][width - 1] });
            }
        };
        // ratio test; ties broken by the lowest basis index (Bland)
        let mut leave: Option<(usize, T)> = None;
        for r in 0..mcons {
            let coeff = t[r][enter];
            if coeff > tol {
                let ratio = t[r][width - 1] / coeff;
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio - tol
                            || (ratio < *lratio + tol && basis[r] < basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (lr, _) = match leave {
            Some(l) => l,
            None => return LpOutcome::Unbounded,
        };
        // pivot on (lr, enter)
        let pivot = t[lr][enter];
        for v in t[lr].iter_mut() {
            *v = *v / pivot;
        }
        for r in 0..=mcons {
            if r == lr {
                continue;
            }
            let factor = t[r][enter];
            if factor == T::zero() {
                continue;
            }
            for j in 0..width {
                let delta = factor * t[lr][j];
                t[r][j] = t[r][j] - delta;
            }
        }
        basis[lr] = enter;
    }
    LpOutcome::Stalled
}
