//! Small dense linear-programming routines.
//!
//! The only consumer is the convex-decomposition feasibility check, whose
//! instances have a handful of variables and at most a few dozen equality
//! constraints, so a plain two-phase tableau simplex with Bland's rule is
//! plenty.

use crate::error::{Error, Result};

/// Outcome of a feasibility solve.
#[derive(Debug, Clone)]
pub enum Feasibility {
    /// A nonnegative solution of `A x = b` with the achieved residual.
    Feasible(Vec<f64>),
    Infeasible,
}

/// Find `x >= 0` with `A x = b`, where `a` is row-major with `rows * cols`
/// entries. Returns `Feasible` when phase-1 drives the artificial objective
/// below `tol`.
pub fn solve_nonnegative(a: &[f64], rows: usize, cols: usize, b: &[f64], tol: f64) -> Result<Feasibility> {
    if a.len() != rows * cols || b.len() != rows {
        return Err(Error::Dimension(format!(
            "LP expects {}x{} matrix and rhs of length {}, got {} entries and {}",
            rows,
            cols,
            rows,
            a.len(),
            b.len()
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Validation("LP with empty system".into()));
    }

    // Tableau layout: [ original vars | artificial vars | rhs ], one extra
    // row for the phase-1 objective. Rows are sign-normalized so rhs >= 0.
    let width = cols + rows + 1;
    let mut t = vec![0.0f64; (rows + 1) * width];
    for r in 0..rows {
        let flip = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..cols {
            t[r * width + c] = flip * a[r * cols + c];
        }
        t[r * width + cols + r] = 1.0;
        t[r * width + width - 1] = flip * b[r];
    }
    // Objective: minimize the sum of artificials. Expressed through the
    // basis, the reduced objective row is minus the sum of constraint rows.
    for c in 0..width {
        let mut s = 0.0;
        for r in 0..rows {
            if c < cols || c == width - 1 {
                s += t[r * width + c];
            }
        }
        if c < cols || c == width - 1 {
            t[rows * width + c] = -s;
        }
    }

    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    let max_iters = 50 * (rows + cols).max(16);
    for _ in 0..max_iters {
        // Bland's rule: first column with a negative reduced cost.
        let mut pivot_col = None;
        for c in 0..cols + rows {
            if t[rows * width + c] < -1e-12 {
                pivot_col = Some(c);
                break;
            }
        }
        let Some(pc) = pivot_col else { break };

        // Ratio test, ties broken by smallest basis variable (Bland).
        let mut pivot_row = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            let coef = t[r * width + pc];
            if coef > 1e-12 {
                let ratio = t[r * width + width - 1] / coef;
                if ratio < best - 1e-15 || (ratio < best + 1e-15 && pivot_row.is_none_or(|pr| basis[r] < basis[pr])) {
                    best = ratio;
                    pivot_row = Some(r);
                }
            }
        }
        let Some(pr) = pivot_row else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0);
            // treat as numerical failure.
            return Err(Error::Numerical("LP phase-1 ratio test failed".into()));
        };

        // Pivot.
        let piv = t[pr * width + pc];
        for c in 0..width {
            t[pr * width + c] /= piv;
        }
        for r in 0..=rows {
            if r == pr {
                continue;
            }
            let f = t[r * width + pc];
            if f != 0.0 {
                for c in 0..width {
                    t[r * width + c] -= f * t[pr * width + c];
                }
            }
        }
        basis[pr] = pc;
    }

    let objective = -t[rows * width + width - 1];
    if objective.abs() > tol {
        return Ok(Feasibility::Infeasible);
    }
    let mut x = vec![0.0f64; cols];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < cols {
            x[bv] = t[r * width + width - 1].max(0.0);
        }
    }
    Ok(Feasibility::Feasible(x))
}
