//! Dense matrices, singular values, the singular value function, exterior
//! powers, subspaces, and reduced row echelon pivots.
//!
//! Everything is plain `f64` row-major storage sized for ambient dimensions
//! up to [`DIM_MAX`]. The singular value backend is a one-sided Jacobi sweep
//! ([`singular_values`]), chosen for its high relative accuracy on the tiny
//! singular values that long products of contractions produce.

mod rref;
mod subspace;
mod svd;
mod wedge;

pub use rref::{pivot_vector, rref, PivotVector};
pub use subspace::{image_subspace, Subspace};
pub(crate) use subspace::qr_diagonal;
pub use svd::singular_values;
pub(crate) use svd::{log_interp_product, singular_values_with_right};
pub use wedge::{binomial, exterior_power, svf_via_wedge};

use crate::{Error, Result};

/// Hard cap on ambient dimension. Exterior powers are indexed by k-subsets,
/// so `binomial(16, 8) = 12870` already bounds intermediate sizes.
pub const DIM_MAX: usize = 16;

/// Relative threshold below which a vector is treated as dependent on a span.
pub(crate) const SPAN_TOL: f64 = 1e-10;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged or empty input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInput("matrix must have at least one row and column".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {} but row 0 has length {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(ambient: usize, cols: &[Vec<f64>]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidInput("matrix must have at least one column".into()));
        }
        let mut m = Matrix::zeros(ambient, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != ambient {
                return Err(Error::InvalidInput(format!(
                    "column {j} has length {} but ambient dimension is {ambient}",
                    c.len()
                )));
            }
            for i in 0..ambient {
                m.data[i * cols.len() + j] = c[i];
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        self.mul_into(rhs, &mut out);
        out
    }

    /// Writes `self * rhs` into a preallocated matrix of the right shape.
    pub fn mul_into(&self, rhs: &Matrix, out: &mut Matrix) {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        assert!(out.rows == self.rows && out.cols == rhs.cols, "output shape mismatch");
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            orow.fill(0.0);
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow.iter()) {
                    *o += a * b;
                }
            }
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match columns");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, k: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * k).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_in_place(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Operator 2-norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        singular_values(self)[0]
    }

    /// Smallest singular value (of `min(rows, cols)` values).
    pub fn min_singular_value(&self) -> f64 {
        *singular_values(self).last().expect("at least one singular value")
    }

    /// Determinant via LU with partial pivoting. Square matrices only.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant requires a square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
        det
    }

    /// Solves `self * X = rhs` via LU with partial pivoting.
    /// Returns `None` when a pivot vanishes.
    pub fn solve(&self, rhs: &Matrix) -> Option<Matrix> {
        assert!(self.is_square(), "solve requires a square matrix");
        assert_eq!(rhs.rows, self.rows, "right-hand side height mismatch");
        let n = self.rows;
        let k = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                for j in 0..k {
                    b.swap(col * k + j, piv * k + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..k {
                    b[r * k + j] -= f * b[col * k + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..k {
                let mut s = b[col * k + j];
                for l in col + 1..n {
                    s -= a[col * n + l] * b[l * k + j];
                }
                b[col * k + j] = s / d;
            }
        }
        Some(Matrix { rows: n, cols: k, data: b })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

/// Singular value function: for `0 <= s < d` the product
/// `a_1 ... a_floor(s) * a_(floor(s)+1)^(s - floor(s))` of the ordered
/// singular values, and `|det A|^(s/d)` for `s >= d`. `0^0` counts as 1, so
/// integer `s` never invents a zero from the next (possibly zero) value.
pub fn svf(a: &Matrix, s: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "svf requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidInput(format!("svf exponent must be finite and >= 0, got {s}")));
    }
    let d = a.rows() as f64;
    if s == 0.0 {
        return Ok(1.0);
    }
    if s >= d {
        let det = a.det().abs();
        return Ok(if det == 0.0 { 0.0 } else { det.powf(s / d) });
    }
    let sv = singular_values(a);
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let mut out = 1.0;
    for v in &sv[..k] {
        out *= v;
    }
    if frac > 0.0 {
        out *= sv[k].powf(frac);
    }
    Ok(out)
}

/// Evaluates the singular value function on `A` and on its transpose.
/// The two values agree up to rounding; the pair is exposed for cross-checks.
pub fn svf_dual_check(a: &Matrix, s: f64) -> Result<(f64, f64)> {
    Ok((svf(a, s)?, svf(&a.transpose(), s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn product_and_transpose() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ab = a.mul(&b);
        assert_eq!(ab, mat(&[&[2.0, 1.0], &[4.0, 3.0]]));
        assert_eq!(a.transpose(), mat(&[&[1.0, 3.0], &[2.0, 4.0]]));
    }

    #[test]
    fn determinant_and_solve() {
        let a = mat(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert!((a.det() - 5.0).abs() < 1e-12);
        let rhs = mat(&[&[1.0], &[0.0]]);
        let x = a.solve(&rhs).unwrap();
        assert!((x.get(0, 0) - 0.6).abs() < 1e-12);
        assert!((x.get(1, 0) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn svf_interpolates_singular_values() {
        // diag(4/25, 0) at s = 1/2: (4/25)^(1/2) = 2/5.
        let a = mat(&[&[0.16, 0.0], &[0.0, 0.0]]);
        let v = svf(&a, 0.5).unwrap();
        assert!((v - 0.4).abs() < 1e-14, "got {v}");
        // Integer exponent with a vanishing next value: 0^0 = 1.
        assert!((svf(&a, 1.0).unwrap() - 0.16).abs() < 1e-14);
        // Past the rank the value is exactly zero.
        assert_eq!(svf(&a, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn svf_determinant_branch() {
        let a = mat(&[&[0.5, 0.0], &[0.0, 0.25]]);
        // s = d: |det|, s = 3: |det|^(3/2).
        assert!((svf(&a, 2.0).unwrap() - 0.125).abs() < 1e-14);
        assert!((svf(&a, 3.0).unwrap() - 0.125f64.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn svf_rejects_bad_input() {
        let a = mat(&[&[1.0, 0.0]]);
        assert!(svf(&a, 1.0).is_err());
        let b = Matrix::identity(2);
        assert!(svf(&b, -0.5).is_err());
    }

    #[test]
    fn dual_check_agrees() {
        let a = mat(&[&[0.3, 0.1], &[-0.2, 0.4]]);
        let (x, y) = svf_dual_check(&a, 1.3).unwrap();
        assert!((x - y).abs() <= 1e-12 * x.max(y));
    }
}
