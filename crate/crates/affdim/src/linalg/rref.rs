//! Reduced row echelon form and pivot position vectors.

use super::{Matrix, Subspace};
use crate::{Error, Result};

/// Pivot tolerance: an entry qualifies as a pivot only when it exceeds
/// `1e-10` times the max-norm of its own row.
const PIVOT_TOL: f64 = 1e-10;

/// Strictly increasing pivot column positions, 1-based. For `r` pivots the
/// i-th position satisfies `p_i >= i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotVector(Vec<usize>);

impl PivotVector {
    /// Builds a pivot vector from explicit 1-based positions. Positions must
    /// be strictly increasing and at least 1; the i-th entry must be >= i,
    /// which strict increase from a floor of 1 already guarantees.
    pub fn new(positions: Vec<usize>) -> Result<Self> {
        for (i, &p) in positions.iter().enumerate() {
            if p == 0 {
                return Err(Error::InvalidInput(
                    "pivot positions are 1-based and must be positive".into(),
                ));
            }
            if i > 0 && p <= positions[i - 1] {
                return Err(Error::InvalidInput(
                    "pivot positions must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self(positions))
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for PivotVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Reduced row echelon form with partial pivoting. The result has leading
/// ones, zeros above and below each pivot, zero rows at the bottom, and
/// strictly increasing pivot columns; the pivot columns are returned
/// 1-based alongside it.
pub fn rref(m: &Matrix) -> (Matrix, PivotVector) {
    let rows = m.rows();
    let cols = m.cols();
    let mut r = m.clone();
    let mut pivots = Vec::new();
    let mut lead = 0usize;
    for col in 0..cols {
        if lead == rows {
            break;
        }
        // Among the remaining rows, pick the largest entry that also clears
        // its own row's relative threshold.
        let mut best: Option<(usize, f64)> = None;
        for row in lead..rows {
            let v = r.get(row, col).abs();
            if v == 0.0 {
                continue;
            }
            let row_max = (0..cols).fold(0.0f64, |acc, j| acc.max(r.get(row, j).abs()));
            if v > PIVOT_TOL * row_max {
                match best {
                    Some((_, bv)) if bv >= v => {}
                    _ => best = Some((row, v)),
                }
            }
        }
        let Some((prow, _)) = best else { continue };
        if prow != lead {
            for j in 0..cols {
                let a = r.get(lead, j);
                let b = r.get(prow, j);
                r.set(lead, j, b);
                r.set(prow, j, a);
            }
        }
        let d = r.get(lead, col);
        for j in 0..cols {
            r.set(lead, j, r.get(lead, j) / d);
        }
        r.set(lead, col, 1.0);
        for row in 0..rows {
            if row == lead {
                continue;
            }
            let f = r.get(row, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..cols {
                r.set(row, j, r.get(row, j) - f * r.get(lead, j));
            }
            r.set(row, col, 0.0);
        }
        pivots.push(col + 1);
        lead += 1;
    }
    (r, PivotVector(pivots))
}

/// Pivot positions of a subspace with respect to an ordered basis of `R^d`:
/// the pivot columns of the reduced row echelon form of the coordinate
/// matrix of (any orthonormal basis of) `W` in that basis. Invariant under
/// the choice of basis of `W`, since the echelon form is a canonical
/// representative of the row space.
///
/// `basis` holds the ordered basis vectors as columns and must be safely
/// invertible (smallest singular value above `1e-10`).
pub fn pivot_vector(w: &Subspace, basis: &Matrix) -> Result<PivotVector> {
    let d = w.ambient_dim();
    if !basis.is_square() || basis.rows() != d {
        return Err(Error::InvalidInput(format!(
            "ordered basis must be {d}x{d}, got {}x{}",
            basis.rows(),
            basis.cols()
        )));
    }
    if basis.min_singular_value() <= 1e-10 {
        return Err(Error::InvalidInput(
            "ordered basis is numerically degenerate (singular value <= 1e-10)".into(),
        ));
    }
    // Row i of the coordinate matrix holds the coordinates of the i-th
    // spanning vector of W in the given basis.
    let coords = basis
        .solve(w.basis())
        .ok_or_else(|| Error::InvalidInput("ordered basis is singular".into()))?;
    let (_, piv) = rref(&coords.transpose());
    Ok(piv)
}
