//! Lyapunov spectra of the transpose cocycle and the Lyapunov dimension.

use super::{check_measure_tuple, entropy, stream_rng, MeasureSpec, PathSampler};
use crate::error::{Error, Result};
use crate::linalg::{qr_diagonal, Matrix};
use crate::parallel::map_indexed;
use crate::words::MatrixTuple;

/// Reorthogonalization stride: products of ten contracting matrices stay
/// comfortably away from underflow at any supported dimension.
const QR_STRIDE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumMode {
    MonteCarlo,
    ExactDiagonal,
    ExactAntidiagonal,
}

/// Lyapunov exponents in nats per symbol, sorted non-increasing.
#[derive(Clone, Debug)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    /// Across-trial standard error per exponent; zeros in exact modes.
    pub stderr: Vec<f64>,
    pub mode: SpectrumMode,
}

/// Monte Carlo estimate of the Lyapunov exponents of `x -> T_{x_1}^*`
/// along paths of `mu`: QR-reorthogonalized products over sampled words,
/// averaged across independent trials with per-trial seed streams.
pub fn lyapunov_mc(
    t: &MatrixTuple,
    mu: &MeasureSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovSpectrum> {
    check_measure_tuple(t, mu)?;
    if n == 0 || trials == 0 {
        return Err(Error::InvalidInput(
            "path length and trial count must be at least 1".into(),
        ));
    }
    if (n as u128) * (trials as u128) > t.visit_budget() as u128 {
        return Err(Error::ResourceLimit(format!(
            "{n} steps x {trials} trials exceeds the visit budget {}; raise AFFDIM_BUDGET",
            t.visit_budget()
        )));
    }
    let d = t.dim();
    let tt = t.transposed();
    let sampler = PathSampler::new(mu)?;
    // Per-letter rigorous floor: every QR diagonal of a block product is at
    // least the product of the step-wise smallest singular values. Rounding
    // can cancel a nearly collapsed frame direction to exact zero, so each
    // block's log contributions are clamped at that floor instead of
    // feeding ln(0) = -inf into the average.
    let floors: Vec<f64> = tt
        .matrices()
        .iter()
        .map(|m| m.min_singular_value().ln())
        .collect();

    let per_trial: Vec<Vec<f64>> = map_indexed(trials, |trial| {
        let mut rng = stream_rng(seed, trial as u64);
        let mut logs = vec![0.0f64; d];
        let mut q = Matrix::identity(d);
        let mut tmp = Matrix::zeros(d, d);
        let mut prev = None;
        let mut pending = 0;
        let mut block_floor = 0.0f64;
        let flush = |q: &mut Matrix, logs: &mut [f64], floor: f64| {
            let (ortho, diag) = qr_diagonal(q);
            for (acc, r) in logs.iter_mut().zip(&diag) {
                *acc += r.abs().ln().max(floor);
            }
            *q = ortho;
        };
        for _ in 0..n {
            let s = sampler.step(&mut rng, prev);
            prev = Some(s);
            block_floor += floors[s as usize - 1];
            tt.matrix(s).mul_into(&q, &mut tmp);
            std::mem::swap(&mut q, &mut tmp);
            pending += 1;
            if pending == QR_STRIDE {
                flush(&mut q, &mut logs, block_floor);
                pending = 0;
                block_floor = 0.0;
            }
        }
        if pending > 0 {
            flush(&mut q, &mut logs, block_floor);
        }
        let mut rates: Vec<f64> = logs.iter().map(|l| l / n as f64).collect();
        rates.sort_by(|a, b| b.partial_cmp(a).unwrap());
        rates
    });

    let mut exponents = vec![0.0f64; d];
    let mut stderr = vec![0.0f64; d];
    for j in 0..d {
        let mean = per_trial.iter().map(|r| r[j]).sum::<f64>() / trials as f64;
        exponents[j] = mean;
        // A singular matrix in the tuple makes the bottom exponent -inf;
        // the spread around an infinite mean is meaningless, not NaN.
        if trials > 1 && mean.is_finite() {
            let var = per_trial
                .iter()
                .map(|r| (r[j] - mean).powi(2))
                .sum::<f64>()
                / (trials - 1) as f64;
            stderr[j] = (var / trials as f64).sqrt();
        }
    }
    Ok(LyapunovSpectrum {
        exponents,
        stderr,
        mode: SpectrumMode::MonteCarlo,
    })
}

fn is_diagonal(a: &Matrix) -> bool {
    let d = a.rows();
    (0..d).all(|r| (0..d).all(|c| r == c || a.get(r, c) == 0.0))
}

fn is_antidiagonal_2x2(a: &Matrix) -> bool {
    a.rows() == 2 && a.get(0, 0) == 0.0 && a.get(1, 1) == 0.0
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Position-parity letter distributions of the chain: the law of letters at
/// odd and at even positions along one ergodic component of the two-step
/// chain. Equal to the stationary vector unless the support digraph has
/// even period, in which case the two parity classes each carry mass 1/2.
fn parity_distributions(mu: &MeasureSpec) -> (Vec<f64>, Vec<f64>) {
    let p = mu.stationary().to_vec();
    let Some(rows) = mu.transition_rows() else {
        return (p.clone(), p);
    };
    let m = p.len();
    let support: Vec<usize> = (0..m).filter(|&i| p[i] > 0.0).collect();
    let start = support[0];
    let mut level = vec![usize::MAX; m];
    level[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &support {
            if rows[u][v] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: u64 = 0;
    for &u in &support {
        for &v in &support {
            if rows[u][v] > 0.0 {
                let diff = level[u] as i64 + 1 - level[v] as i64;
                g = gcd(g, diff.unsigned_abs());
            }
        }
    }
    if g % 2 == 1 {
        return (p.clone(), p);
    }
    // Even period: condition on the parity class of the first letter.
    let mut odd = vec![0.0; m];
    let mut even = vec![0.0; m];
    for &i in &support {
        if level[i] % 2 == 0 {
            odd[i] = 2.0 * p[i];
        } else {
            even[i] = 2.0 * p[i];
        }
    }
    (odd, even)
}

/// Closed-form spectrum for all-diagonal or all-antidiagonal 2x2 tuples
/// under an ergodic measure. Anything else is reported as unsupported so
/// the caller can fall back to [`lyapunov_mc`].
pub fn lyapunov_exact(t: &MatrixTuple, mu: &MeasureSpec) -> Result<LyapunovSpectrum> {
    check_measure_tuple(t, mu)?;
    if !mu.is_ergodic() {
        return Err(Error::Unsupported(
            "exact spectra need an ergodic measure".into(),
        ));
    }
    let d = t.dim();
    let m = t.m();
    if t.matrices().iter().all(is_diagonal) {
        // Coordinate directions are invariant, so each exponent is the
        // Birkhoff average of one diagonal entry's log.
        let p = mu.stationary();
        let mut exponents: Vec<f64> = (0..d)
            .map(|j| {
                (0..m)
                    .map(|i| p[i] * t.matrices()[i].get(j, j).abs().ln())
                    .sum()
            })
            .collect();
        exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return Ok(LyapunovSpectrum {
            exponents,
            stderr: vec![0.0; d],
            mode: SpectrumMode::ExactDiagonal,
        });
    }
    if t.matrices().iter().all(is_antidiagonal_2x2) {
        // Two consecutive maps compose to a diagonal matrix, so over pairs
        // the coordinates decouple: the first coordinate collects the
        // upper entry at odd positions and the lower entry at even ones.
        // Swapping the starting parity class swaps the two coordinate
        // rates, so the sorted pair is the same on both components.
        let c: Vec<f64> = t.matrices().iter().map(|a| a.get(0, 1).abs().ln()).collect();
        let dd: Vec<f64> = t.matrices().iter().map(|a| a.get(1, 0).abs().ln()).collect();
        let (odd, even) = parity_distributions(mu);
        let avg = |w: &[f64], vals: &[f64]| -> f64 {
            w.iter().zip(vals).map(|(wi, vi)| wi * vi).sum()
        };
        let u = 0.5 * (avg(&odd, &c) + avg(&even, &dd));
        let v = 0.5 * (avg(&odd, &dd) + avg(&even, &c));
        let exponents = vec![u.max(v), u.min(v)];
        return Ok(LyapunovSpectrum {
            exponents,
            stderr: vec![0.0; 2],
            mode: SpectrumMode::ExactAntidiagonal,
        });
    }
    Err(Error::Unsupported(
        "exact spectra cover all-diagonal and all-antidiagonal 2x2 tuples only".into(),
    ))
}

/// Unique nonnegative root of `h + G(s) = 0`, where `G` accumulates the
/// exponents linearly segment by segment for `s < d` and continues as
/// `(s/d) * (sum of exponents)` beyond `d`. Requires strictly negative
/// exponents, which make `G` strictly decreasing.
pub fn lyapunov_dim(mu: &MeasureSpec, spectrum: &LyapunovSpectrum) -> Result<f64> {
    let lams = &spectrum.exponents;
    // NaN is rejected; -inf is allowed (a fully collapsed direction
    // contributes nothing beyond its segment).
    if lams.is_empty() || lams.iter().any(|&l| l.is_nan() || l >= 0.0) {
        return Err(Error::InvalidInput(
            "Lyapunov dimension needs strictly negative exponents".into(),
        ));
    }
    if lams.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("exponents must be non-increasing".into()));
    }
    let h = entropy(mu);
    if h == 0.0 {
        return Ok(0.0);
    }
    let d = lams.len();
    let mut g = 0.0;
    for (j, &lam) in lams.iter().enumerate() {
        if h + g + lam < 0.0 {
            return Ok(j as f64 + (h + g) / -lam);
        }
        g += lam;
    }
    Ok(d as f64 * h / -g)
}
