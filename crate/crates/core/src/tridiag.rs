//! Thomas algorithm for tridiagonal systems.
//!
//! On the M-matrices produced by the finite-volume step (positive diagonal,
//! nonpositive off-diagonals, column dominance) every elimination update adds
//! nonnegative terms, so a nonnegative right-hand side yields a nonnegative
//! solution in floating point too.

use crate::error::{Error, Result};

/// Solves `A x = rhs` in place, where row `i` of `A` is
/// `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]`.
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_in_place(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    assert!(lower.len() == n && diag.len() == n && upper.len() == n, "band lengths must match rhs");
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    c[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        c[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}
