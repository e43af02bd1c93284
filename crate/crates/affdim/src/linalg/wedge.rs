//! Exterior powers and the singular value function computed through them.
//!
//! The k-th exterior power of a `d x d` matrix acts on the
//! `binomial(d, k)`-dimensional space spanned by `e_{i_1} ^ ... ^ e_{i_k}`
//! with index sets in lexicographic order; its entries are the k x k minors.
//! Wedge norms multiply top singular values, which gives an independent
//! route to the singular value function used for cross-checks.

use super::{svf, Matrix, DIM_MAX};
use crate::{Error, Result};

/// Binomial coefficient; callers stay within `n <= 64` where this cannot
/// overflow a u64.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u64 = 1;
    for i in 0..k {
        out = out * (n - i) as u64 / (i + 1) as u64;
    }
    out
}

/// All k-subsets of `{0, ..., d-1}` in lexicographic order.
pub(crate) fn ksubsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(d, k) as usize);
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for i in start..=d - need {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// Determinant of the submatrix of `a` with the given row and column indices.
fn minor_det(a: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        1 => a.get(rows[0], cols[0]),
        2 => {
            a.get(rows[0], cols[0]) * a.get(rows[1], cols[1])
                - a.get(rows[0], cols[1]) * a.get(rows[1], cols[0])
        }
        _ => {
            let mut sub = Matrix::zeros(k, k);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    sub.set(i, j, a.get(r, c));
                }
            }
            sub.det()
        }
    }
}

/// The k-th exterior power of a square matrix, a
/// `binomial(d,k) x binomial(d,k)` matrix of k x k minors with both index
/// axes in lexicographic order. Multiplicative: `(AB)^k = A^k B^k`.
pub fn exterior_power(a: &Matrix, k: usize) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "exterior power requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let d = a.rows();
    if d > DIM_MAX {
        return Err(Error::ResourceLimit(format!("ambient dimension {d} exceeds {DIM_MAX}")));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("exterior power order {k} not in 1..={d}")));
    }
    let subsets = ksubsets(d, k);
    let n = subsets.len();
    let mut out = Matrix::zeros(n, n);
    for (i, rows) in subsets.iter().enumerate() {
        for (j, cols) in subsets.iter().enumerate() {
            out.set(i, j, minor_det(a, rows, cols));
        }
    }
    Ok(out)
}

/// Singular value function evaluated through wedge norms:
/// `||A^k||^(k+1-s) * ||A^(k+1)||^(s-k)` for `k < s < k+1`, with the plain
/// wedge norm at integer `s`. Agrees with [`svf`] and serves as its oracle.
pub fn svf_via_wedge(a: &Matrix, s: f64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidInput("svf_via_wedge requires a square matrix".into()));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidInput(format!("exponent must be finite and >= 0, got {s}")));
    }
    let d = a.rows() as f64;
    if s == 0.0 {
        return Ok(1.0);
    }
    if s >= d {
        return svf(a, s);
    }
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let low = if k == 0 { 1.0 } else { exterior_power(a, k)?.op_norm() };
    if frac == 0.0 {
        return Ok(low);
    }
    let high = exterior_power(a, k + 1)?.op_norm();
    Ok(low.powf(1.0 - frac) * high.powf(frac))
}
