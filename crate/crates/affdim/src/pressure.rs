//! Growth rates of singular-value sums over words and the dimension roots
//! derived from them.
//!
//! For a contracting tuple the quantity of interest is the exponential
//! growth rate of `sum over |I| = n of phi^s(T_I^* P_W)` (or of
//! `phi^s(T_I)` when no subspace is fixed). The plain sums give the point
//! estimator; envelope sums that additionally maximize over a family of
//! carried subspaces are submultiplicative, so their averages `b_n / n`
//! are rigorous upper bounds for the limit at every `n`.

use crate::error::{Error, Result};
use crate::linalg::{image_subspace, log_interp_product, singular_values, Matrix, Subspace};
use crate::words::{fold_words, word_product, MatrixTuple};

/// Log-sum-exp accumulator: represents `log(sum of exp(x_i))` as
/// `max + log(scaled)` with `scaled = sum of exp(x_i - max)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn zero() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub(crate) fn of(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            Self::zero()
        } else {
            LogSum { max: x, scaled: 1.0 }
        }
    }

    pub(crate) fn merge(a: Self, b: Self) -> Self {
        // Empty accumulators carry max = -inf; exp(-inf - -inf) would be NaN.
        if a.max == f64::NEG_INFINITY {
            return b;
        }
        if b.max == f64::NEG_INFINITY {
            return a;
        }
        if a.max >= b.max {
            LogSum {
                max: a.max,
                scaled: a.scaled + b.scaled * (b.max - a.max).exp(),
            }
        } else {
            LogSum {
                max: b.max,
                scaled: b.scaled + a.scaled * (a.max - b.max).exp(),
            }
        }
    }

    pub(crate) fn value(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `log phi^s(A)` for square `A`, staying in log space so exact zeros come
/// out as negative infinity instead of panicking or losing precision.
fn log_svf(a: &Matrix, s: f64) -> f64 {
    let d = a.rows();
    if s >= d as f64 {
        let det = a.det().abs();
        if det == 0.0 {
            f64::NEG_INFINITY
        } else {
            (s / d as f64) * det.ln()
        }
    } else {
        let logs: Vec<f64> = singular_values(a)
            .iter()
            .map(|&v| if v == 0.0 { f64::NEG_INFINITY } else { v.ln() })
            .collect();
        log_interp_product(&logs, s)
    }
}

/// `log phi^s(T_I^* P_W)` where `bt` holds the orthonormal basis of `W` as
/// rows. The nonzero singular values of `T_I^* P_W` are exactly those of the
/// k x d matrix `B^T T_I`, and the remaining `d - k` are zero, so any
/// `s > k` yields negative infinity.
fn log_svf_projected(bt: &Matrix, t_i: &Matrix, s: f64) -> f64 {
    let y = bt.mul(t_i);
    let logs: Vec<f64> = singular_values(&y)
        .iter()
        .map(|&v| if v == 0.0 { f64::NEG_INFINITY } else { v.ln() })
        .collect();
    log_interp_product(&logs, s)
}

fn validate_s(s: f64) -> Result<()> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::InvalidInput(format!(
            "exponent s must be finite and nonnegative, got {s}"
        )));
    }
    Ok(())
}

fn validate_subspace(t: &MatrixTuple, w: &Subspace) -> Result<()> {
    if w.ambient_dim() != t.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace lives in dimension {}, tuple in dimension {}",
            w.ambient_dim(),
            t.dim()
        )));
    }
    Ok(())
}

/// `(1/n) log(sum over |I| = n of phi^s(T_I^* P_W))`, the finite-n point
/// estimator of the pressure. `w = None` (or a full-dimensional subspace)
/// drops the projection. A proper subspace of dimension `k` makes every term
/// vanish for `s > k`, so the rate is returned as negative infinity.
pub fn phi_sum_rate(t: &MatrixTuple, w: Option<&Subspace>, s: f64, n: usize) -> Result<f64> {
    validate_s(s)?;
    if n == 0 {
        return Err(Error::InvalidInput("word length n must be at least 1".into()));
    }
    let d = t.dim();
    let proper = match w {
        Some(sub) => {
            validate_subspace(t, sub)?;
            sub.dim() < d
        }
        None => false,
    };
    let total = if proper {
        let sub = w.unwrap();
        if s > sub.dim() as f64 {
            return Ok(f64::NEG_INFINITY);
        }
        let bt = sub.basis().transpose();
        fold_words(
            t,
            n,
            LogSum::zero(),
            &|_, prod| LogSum::of(log_svf_projected(&bt, prod, s)),
            &|a, b| LogSum::merge(a, b),
        )?
    } else {
        fold_words(
            t,
            n,
            LogSum::zero(),
            &|_, prod| LogSum::of(log_svf(prod, s)),
            &|a, b| LogSum::merge(a, b),
        )?
    };
    Ok(total.value() / n as f64)
}

/// Candidate subspaces `T_K^* W` over all words `|K| <= depth` (including
/// the empty word), deduplicated by projector distance. The family is what
/// the envelope potential maximizes over; by the orbit-span stabilization
/// argument, depth `d - 1` already captures every direction the family can
/// reach up to span.
fn psi_candidates(t: &MatrixTuple, w: &Subspace, depth: usize) -> Result<Vec<Subspace>> {
    let m = t.m();
    let mut word_count: u128 = 0;
    for q in 1..=depth {
        word_count += (m as u128).saturating_pow(q as u32);
    }
    if word_count > 200_000 {
        return Err(Error::ResourceLimit(format!(
            "candidate family needs {word_count} words at depth {depth}; lower the depth"
        )));
    }
    let mut subs = vec![w.clone()];
    let mut word = Vec::new();
    for q in 1..=depth {
        let count = (m as u64).pow(q as u32);
        for idx in 0..count {
            word.clear();
            let mut rem = idx;
            for _ in 0..q {
                word.push((rem % m as u64) as u8 + 1);
                rem /= m as u64;
            }
            let a = word_product(t, &word)?.transpose();
            let image = image_subspace(&a, w)?;
            if subs.iter().all(|c| c.distance(&image) > 1e-10) {
                subs.push(image);
            }
        }
    }
    Ok(subs)
}

/// Evaluates the envelope potential at a single word: the maximum of
/// `phi^s(T_I^* P_C)` over the candidate family of `W` at the given depth.
/// Linear scale (not log). Monotone nondecreasing in `depth`, and at least
/// the plain value since the empty word keeps `W` itself in the family.
pub fn psi_value(t: &MatrixTuple, w: &Subspace, s: f64, word: &[u8], depth: usize) -> Result<f64> {
    validate_s(s)?;
    validate_subspace(t, w)?;
    let prod = word_product(t, word)?;
    let d = t.dim();
    let mut best = f64::NEG_INFINITY;
    for c in psi_candidates(t, w, depth)? {
        let v = if c.dim() == d {
            log_svf(&prod, s)
        } else {
            let bt = c.basis().transpose();
            log_svf_projected(&bt, &prod, s)
        };
        if v > best {
            best = v;
        }
    }
    Ok(best.exp())
}

/// `(1/n) log(sum over |I| = n of psi(I))` with the envelope potential at
/// the given depth. The envelope is submultiplicative, so these averages
/// form a subadditive sequence and each one is a rigorous upper bound for
/// the pressure; they dominate `phi_sum_rate` term by term.
pub fn psi_sum_rate(t: &MatrixTuple, w: &Subspace, s: f64, n: usize, depth: usize) -> Result<f64> {
    validate_s(s)?;
    validate_subspace(t, w)?;
    if n == 0 {
        return Err(Error::InvalidInput("word length n must be at least 1".into()));
    }
    let d = t.dim();
    let bases: Vec<(usize, Matrix)> = psi_candidates(t, w, depth)?
        .iter()
        .map(|c| (c.dim(), c.basis().transpose()))
        .collect();
    let total = fold_words(
        t,
        n,
        LogSum::zero(),
        &|_, prod| {
            let mut best = f64::NEG_INFINITY;
            for (k, bt) in &bases {
                let v = if *k == d {
                    log_svf(prod, s)
                } else {
                    log_svf_projected(bt, prod, s)
                };
                if v > best {
                    best = v;
                }
            }
            LogSum::of(best)
        },
        &|a, b| LogSum::merge(a, b),
    )?;
    Ok(total.value() / n as f64)
}

/// How the point estimate in a [`PressureEstimate`] was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    /// Plain rate at the largest scheduled word length.
    PhiRate,
    /// Aitken delta-squared extrapolation of the rate sequence; heuristic,
    /// never used for the rigorous bound.
    PhiRateAitken,
}

impl EstimateMethod {
    pub fn label(self) -> &'static str {
        match self {
            EstimateMethod::PhiRate => "phi-rate",
            EstimateMethod::PhiRateAitken => "phi-rate-aitken-heuristic",
        }
    }
}

/// Finite-size pressure estimate at a fixed exponent.
#[derive(Clone, Debug)]
pub struct PressureEstimate {
    /// Exponent the sums were evaluated at.
    pub s: f64,
    /// Point estimate of the pressure; heuristic, clamped so that it never
    /// exceeds `upper_bound`.
    pub value: f64,
    /// Rigorous upper bound: minimum of the subadditive envelope averages
    /// over the schedule (for the unprojected potential the plain averages
    /// are themselves subadditive and serve directly).
    pub upper_bound: f64,
    /// `(n, rate)` pairs of the point estimator in schedule order.
    pub sequence: Vec<(usize, f64)>,
    /// Provenance of `value`.
    pub method: EstimateMethod,
}

/// Parameters shared by the pressure and dimension estimators.
#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    /// Strictly increasing word lengths; rates are reported at each entry
    /// and root solves use the last.
    pub schedule: Vec<usize>,
    /// Depth of the carried-subspace family for envelope sums;
    /// `None` means ambient dimension minus one.
    pub depth: Option<usize>,
    /// Bisection tolerance in the exponent.
    pub s_tol: f64,
    /// Bisection iteration cap.
    pub max_iter: u32,
    /// Enable Aitken extrapolation of the rate sequence (heuristic).
    pub aitken: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            schedule: vec![4, 8],
            depth: None,
            s_tol: 1e-4,
            max_iter: 80,
            aitken: false,
        }
    }
}

fn validate_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("schedule must be non-empty".into()));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "schedule must be strictly increasing positive word lengths".into(),
        ));
    }
    Ok(())
}

/// Pressure at a fixed exponent: point estimate plus a rigorous upper bound.
pub fn pressure_estimate(
    t: &MatrixTuple,
    w: Option<&Subspace>,
    s: f64,
    cfg: &EstimatorConfig,
) -> Result<PressureEstimate> {
    validate_s(s)?;
    validate_schedule(&cfg.schedule)?;
    let d = t.dim();
    let proper = match w {
        Some(sub) => {
            validate_subspace(t, sub)?;
            sub.dim() < d
        }
        None => false,
    };
    let depth = cfg.depth.unwrap_or(d - 1);

    let mut sequence = Vec::with_capacity(cfg.schedule.len());
    for &n in &cfg.schedule {
        sequence.push((n, phi_sum_rate(t, w, s, n)?));
    }

    let mut upper = f64::INFINITY;
    if proper {
        let sub = w.unwrap();
        for &n in &cfg.schedule {
            upper = upper.min(psi_sum_rate(t, sub, s, n, depth)?);
        }
    } else {
        // phi^s is submultiplicative on square matrices, so the plain
        // averages already bound the limit from above.
        for &(_, rate) in &sequence {
            upper = upper.min(rate);
        }
    }

    let mut value = sequence.last().unwrap().1;
    let mut method = EstimateMethod::PhiRate;
    if cfg.aitken && sequence.len() >= 3 {
        let k = sequence.len();
        let (x0, x1, x2) = (sequence[k - 3].1, sequence[k - 2].1, sequence[k - 1].1);
        let denom = (x2 - x1) - (x1 - x0);
        if x0.is_finite() && x1.is_finite() && x2.is_finite() && denom.abs() > 1e-14 {
            value = x2 - (x2 - x1).powi(2) / denom;
            method = EstimateMethod::PhiRateAitken;
        }
    }
    // The envelope averages bound the limit exactly; pull the heuristic
    // point estimate down onto the bound when it overshoots.
    if value > upper {
        value = upper;
    }
    Ok(PressureEstimate {
        s,
        value,
        upper_bound: upper,
        sequence,
        method,
    })
}

/// Root estimate of a strictly decreasing pressure-in-s curve.
#[derive(Clone, Debug)]
pub struct DimensionEstimate {
    /// Root of the finite-n rate, to bisection accuracy.
    pub value: f64,
    /// Interval guaranteed to contain that root.
    pub bracket: (f64, f64),
    /// Bisection iterations performed.
    pub iterations: u32,
    /// Finite-n rate evaluated at `value`.
    pub pressure_at_value: f64,
    /// Word length used for the solve.
    pub n_used: usize,
    /// False when the iteration cap stopped refinement before `s_tol`.
    pub converged: bool,
}

/// Bisects a strictly decreasing rate with `f(lo) > 0 >= f(hi)` already
/// established by the caller. `slope_floor` is a positive lower bound on
/// the decrease per unit of s (the rate drops by at least `log(1/alpha+)`
/// per unit), used to convert the residual at the midpoint into a root
/// offset; the returned bracket intersects that offset interval with the
/// sign-change interval.
fn bisect_rate<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    slope_floor: f64,
    tol: f64,
    max_iter: u32,
    n_used: usize,
) -> Result<DimensionEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let value = 0.5 * (lo + hi);
    let residual = f(value)?;
    let (rlo, rhi) = if residual >= 0.0 {
        (value, value + residual / slope_floor)
    } else {
        (value + residual / slope_floor, value)
    };
    Ok(DimensionEstimate {
        value,
        bracket: (lo.max(rlo), hi.min(rhi)),
        iterations,
        pressure_at_value: residual,
        n_used,
        converged: hi - lo <= tol,
    })
}

/// Root of the unprojected rate: the zero of
/// `s -> (1/n) log(sum of phi^s(T_I))` at the last scheduled `n`.
///
/// The rate equals `log m` at `s = 0` and decreases by at least
/// `log(1/alpha+)` per unit of `s`, so the root lies below
/// `log m / log(1/alpha+)` and bisection on that interval is safe.
pub fn affinity_dim(t: &MatrixTuple, cfg: &EstimatorConfig) -> Result<DimensionEstimate> {
    validate_schedule(&cfg.schedule)?;
    let n = *cfg.schedule.last().unwrap();
    let slope_floor = -t.alpha_plus().ln();
    let mut hi = (t.m() as f64).ln() / slope_floor + 0.5;
    let f = |s: f64| phi_sum_rate(t, None, s, n);
    let mut attempts = 0;
    while f(hi)? > 0.0 {
        hi *= 2.0;
        attempts += 1;
        if attempts > 4 {
            return Err(Error::Inconsistent(
                "rate failed to turn negative within the theoretical cap".into(),
            ));
        }
    }
    bisect_rate(f, 0.0, hi, slope_floor, cfg.s_tol, cfg.max_iter, n)
}

/// Root of the projected rate on `[0, k]`, `k` the subspace dimension: the
/// supremum of exponents with nonnegative pressure. When the rate is still
/// nonnegative at `s = k` the result clamps to `k` exactly.
pub fn proj_affinity_dim(
    t: &MatrixTuple,
    w: &Subspace,
    cfg: &EstimatorConfig,
) -> Result<DimensionEstimate> {
    validate_schedule(&cfg.schedule)?;
    validate_subspace(t, w)?;
    let n = *cfg.schedule.last().unwrap();
    let k = w.dim() as f64;
    let f = |s: f64| phi_sum_rate(t, Some(w), s, n);
    let at_k = f(k)?;
    if at_k >= 0.0 {
        return Ok(DimensionEstimate {
            value: k,
            bracket: (k, k),
            iterations: 0,
            pressure_at_value: at_k,
            n_used: n,
            converged: true,
        });
    }
    let slope_floor = -t.alpha_plus().ln();
    bisect_rate(f, 0.0, k, slope_floor, cfg.s_tol, cfg.max_iter, n)
}
