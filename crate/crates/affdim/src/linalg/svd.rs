//! One-sided Jacobi singular value decomposition.
//!
//! The one-sided sweep rotates column pairs until all columns are mutually
//! orthogonal; singular values are then the column norms. The method keeps
//! high relative accuracy on widely spread spectra, which matters here:
//! products of `n` contractions routinely have `a_1/a_d` near `1e18`.

use super::Matrix;

/// Maximum number of full sweeps before giving up on further rotation.
/// Convergence is typically reached in well under ten sweeps at these sizes.
const MAX_SWEEPS: usize = 60;

/// Singular values in descending order, `min(rows, cols)` of them.
/// Exactly-zero columns stay exactly zero, so rank-deficient inputs report
/// exact zeros rather than rounding noise.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let work = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (mut vals, _) = jacobi(work, false);
    vals.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    vals
}

/// Singular values (descending) with right singular vectors as matching
/// columns. Square matrices only; used for nullspace extraction.
pub(crate) fn singular_values_with_right(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(a.is_square(), "right singular vectors are only needed for square matrices");
    let n = a.rows();
    let (vals, v) = jacobi(a.clone(), true);
    let v = v.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).expect("finite"));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_v = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            sorted_v.set(i, new_j, v.get(i, old_j));
        }
    }
    (sorted_vals, sorted_v)
}

/// Runs the one-sided sweep on a tall (rows >= cols) matrix. Returns the
/// unsorted column norms and, when requested, the accumulated rotations.
fn jacobi(mut a: Matrix, want_right: bool) -> (Vec<f64>, Option<Matrix>) {
    let rows = a.rows();
    let cols = a.cols();
    let mut v = if want_right { Some(Matrix::identity(cols)) } else { None };
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let x = a.get(i, p);
                    let y = a.get(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..rows {
                    let x = a.get(i, p);
                    let y = a.get(i, q);
                    a.set(i, p, c * x - s * y);
                    a.set(i, q, s * x + c * y);
                }
                if let Some(vm) = v.as_mut() {
                    for i in 0..cols {
                        let x = vm.get(i, p);
                        let y = vm.get(i, q);
                        vm.set(i, p, c * x - s * y);
                        vm.set(i, q, s * x + c * y);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let vals = (0..cols)
        .map(|j| (0..rows).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    (vals, v)
}

/// Log-domain interpolated product over ordered log singular values:
/// the sum of the first `floor(s)` entries plus `frac(s)` times the next.
/// Values past the list length count as `-inf`; `s = len` exactly is the
/// full sum. `-inf` entries propagate, matching a zero singular value.
pub(crate) fn log_interp_product(log_vals: &[f64], s: f64) -> f64 {
    debug_assert!(s >= 0.0 && s.is_finite());
    if s == 0.0 {
        return 0.0;
    }
    let k = s.floor() as usize;
    let frac = s - k as f64;
    if k > log_vals.len() || (k == log_vals.len() && frac > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for v in &log_vals[..k] {
        acc += v;
    }
    if frac > 0.0 {
        acc += frac * log_vals[k];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal_values_are_exact() {
        let a = mat(&[&[0.16, 0.0], &[0.0, 0.0]]);
        assert_eq!(singular_values(&a), vec![0.16, 0.0]);
    }

    #[test]
    fn known_two_by_two() {
        // [[3, 0], [4, 5]] has singular values sqrt(45) and sqrt(5).
        let a = mat(&[&[3.0, 0.0], &[4.0, 5.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wide_matrices_match_their_transpose() {
        let a = mat(&[&[0.2, -0.4, 0.1]]);
        let sv = singular_values(&a);
        let svt = singular_values(&a.transpose());
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - svt[0]).abs() < 1e-14);
    }

    #[test]
    fn tiny_values_keep_relative_accuracy() {
        let a = mat(&[&[1.0, 0.0], &[0.0, 1e-18]]);
        let sv = singular_values(&a);
        assert!((sv[1] - 1e-18).abs() < 1e-30);
    }

    #[test]
    fn right_vectors_diagonalize() {
        let a = mat(&[&[0.3, 0.1], &[-0.2, 0.4]]);
        let (vals, v) = singular_values_with_right(&a);
        // A * v_j has norm vals[j].
        for j in 0..2 {
            let col = v.col(j);
            let img = a.matvec(&col);
            let norm = img.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - vals[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_interp_product_handles_edges() {
        let lv = [0.5f64.ln(), 0.1f64.ln()];
        assert_eq!(log_interp_product(&lv, 0.0), 0.0);
        assert!((log_interp_product(&lv, 1.0) - 0.5f64.ln()).abs() < 1e-15);
        let mid = log_interp_product(&lv, 1.5);
        assert!((mid - (0.5f64.ln() + 0.5 * 0.1f64.ln())).abs() < 1e-15);
        assert_eq!(log_interp_product(&lv, 2.5), f64::NEG_INFINITY);
    }
}
