//! Linear subspaces with orthonormal bases.

use super::{Matrix, SPAN_TOL};
use crate::{Error, Result};

/// A linear subspace of `R^d`, stored as a `d x k` matrix with orthonormal
/// columns. Construction orthonormalizes by modified Gram-Schmidt with one
/// re-orthogonalization pass; vectors whose residual falls below `1e-10`
/// of their original norm are treated as dependent and dropped.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// The span of the given vectors. Dependent vectors are dropped; an
    /// empty span is rejected.
    pub fn from_spanning(ambient: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != ambient {
                return Err(Error::InvalidInput(format!(
                    "vector {i} has length {} but ambient dimension is {ambient}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInput(format!("vector {i} has non-finite entries")));
            }
        }
        let basis = orthonormalize(vectors);
        if basis.is_empty() {
            return Err(Error::DegenerateSubspace("spanning set is numerically zero".into()));
        }
        Ok(Subspace { basis: Matrix::from_cols(ambient, &basis)? })
    }

    /// The span of the columns of a matrix.
    pub fn from_matrix_cols(m: &Matrix) -> Result<Self> {
        let cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.col(j)).collect();
        Subspace::from_spanning(m.rows(), &cols)
    }

    /// The whole space `R^d`.
    pub fn full(d: usize) -> Self {
        Subspace { basis: Matrix::identity(d) }
    }

    /// The i-th coordinate axis (0-based) of `R^d`.
    pub fn axis(d: usize, i: usize) -> Self {
        assert!(i < d, "axis index out of range");
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        Subspace { basis: Matrix::from_cols(d, &[e]).expect("axis basis") }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// The orthonormal basis, columns spanning the subspace.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projector onto the subspace, `B B^T`.
    pub fn projector(&self) -> Matrix {
        self.basis.mul(&self.basis.transpose())
    }

    /// Operator-norm distance between projectors, `||P_V - P_W||`. Zero
    /// exactly when the subspaces coincide; tolerance `1e-10` is the
    /// crate-wide equality threshold.
    pub fn distance(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient_dim(), other.ambient_dim(), "ambient dimensions differ");
        self.projector().sub(&other.projector()).op_norm()
    }

    /// Whether a vector lies in the subspace up to relative tolerance.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        assert_eq!(v.len(), self.ambient_dim());
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return true;
        }
        let coeffs = self.basis.transpose().matvec(v);
        let proj = self.basis.matvec(&coeffs);
        let resid: f64 =
            v.iter().zip(&proj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        resid <= tol * norm
    }
}

/// Image of a subspace under a matrix, `span(A b_1, ..., A b_k)`.
/// For invertible `A` this keeps the dimension; a collapse (rank loss under
/// the dependence threshold) is reported as an error.
pub fn image_subspace(a: &Matrix, w: &Subspace) -> Result<Subspace> {
    if a.cols() != w.ambient_dim() {
        return Err(Error::InvalidInput(format!(
            "matrix has {} columns but subspace lives in dimension {}",
            a.cols(),
            w.ambient_dim()
        )));
    }
    let vecs: Vec<Vec<f64>> = (0..w.dim()).map(|j| a.matvec(&w.basis().col(j))).collect();
    let img = Subspace::from_spanning(a.rows(), &vecs)?;
    if img.dim() < w.dim() {
        return Err(Error::DegenerateSubspace(format!(
            "image dropped from dimension {} to {}",
            w.dim(),
            img.dim()
        )));
    }
    Ok(img)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Returns the
/// surviving orthonormal vectors; inputs whose residual is below
/// `SPAN_TOL` times their own norm are dropped as dependent.
pub(crate) fn orthonormalize(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let orig = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if orig == 0.0 || !orig.is_finite() {
            continue;
        }
        let mut u = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in u.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let resid = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if resid > SPAN_TOL * orig {
            for x in &mut u {
                *x /= resid;
            }
            basis.push(u);
        }
    }
    basis
}

/// Gram-Schmidt QR of a square matrix: returns orthonormal `Q` and the
/// diagonal of `R` (column norms during elimination). Used by the Lyapunov
/// re-orthogonalization loop, where only `diag(R)` matters.
pub(crate) fn qr_diagonal(a: &Matrix) -> (Matrix, Vec<f64>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut q = a.clone();
    let mut diag = vec![0.0; n];
    for j in 0..n {
        let mut col = q.col(j);
        for _ in 0..2 {
            for l in 0..j {
                let prev = q.col(l);
                let c: f64 = col.iter().zip(&prev).map(|(x, y)| x * y).sum();
                for (x, y) in col.iter_mut().zip(&prev) {
                    *x -= c * y;
                }
            }
        }
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        diag[j] = norm;
        if norm > 0.0 {
            for x in &mut col {
                *x /= norm;
            }
        }
        for i in 0..n {
            q.set(i, j, col[i]);
        }
    }
    (q, diag)
}
