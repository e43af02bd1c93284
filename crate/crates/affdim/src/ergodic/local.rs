//! Projected local exponents along symbol sequences.
//!
//! For a word `I` of length `n`, a measure `mu`, and a target subspace `W`
//! of dimension `k`, the local exponent `s_n` is the unique `s` in `[0, k]`
//! with `phi^s(B^T T_I) = mu([I])`, where `B` is an orthonormal basis of `W`
//! and `phi^s` interpolates products of singular values. Along sampled paths
//! these exponents converge to path-class-dependent limits; this module
//! computes single values ([`s_n`]), convergence traces ([`s_limit`]),
//! sampled extremes with cluster detection ([`s_extremes`]), the pivot-based
//! closed form ([`s_via_gamma`]), and the supermultiplicativity constant of
//! the measure ([`check_supermultiplicative`]).

use super::lyapunov::LyapunovSpectrum;
use super::{
    check_measure_tuple, cylinder_mass, log_cylinder_mass, stream_rng, MeasureSpec, PathSampler,
};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, Matrix, PivotVector, Subspace};
use crate::parallel::map_indexed;
use crate::words::{MatrixTuple, Word};

/// Entry magnitude below which a running product is rescaled into the
/// log-scale accumulator, well above the subnormal range.
const RENORM_THRESHOLD: f64 = 1e-120;

/// Cluster width floor: sampled exponents closer than this are never split.
const CLUSTER_TOL_FLOOR: f64 = 1e-2;

/// Cap on stored zero-mass example pairs in a supermultiplicativity report.
const ZERO_PAIR_CAP: usize = 16;

/// Cap on `(word, word)` pairs enumerated by [`check_supermultiplicative`].
const SUPERMULT_PAIR_BUDGET: u64 = 4_000_000;

/// A single local exponent value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExponent {
    /// The exponent, in `[0, dim W]`.
    pub value: f64,
    /// True when the word has zero mass, where the exponent saturates at
    /// `dim W` by convention.
    pub zero_mass: bool,
}

/// Running product `B^T T_{x_1} ... T_{x_j}` with periodic rescaling so that
/// long products of contractions never underflow.
struct ProjectedTrace {
    cur: Matrix,
    tmp: Matrix,
    log_scale: f64,
}

impl ProjectedTrace {
    fn new(w: &Subspace) -> Self {
        let cur = w.basis().transpose();
        let tmp = Matrix::zeros(cur.rows(), cur.cols());
        ProjectedTrace {
            cur,
            tmp,
            log_scale: 0.0,
        }
    }

    fn push(&mut self, t: &Matrix) {
        self.cur.mul_into(t, &mut self.tmp);
        std::mem::swap(&mut self.cur, &mut self.tmp);
        let scale = self.cur.max_abs();
        if scale > 0.0 && scale < RENORM_THRESHOLD {
            self.cur.scale_in_place(1.0 / scale);
            self.log_scale += scale.ln();
        }
    }

    /// Log singular values of the full (unscaled) product, descending;
    /// exact zeros map to negative infinity.
    fn log_singular_values(&self) -> Vec<f64> {
        singular_values(&self.cur)
            .into_iter()
            .map(|sv| {
                if sv > 0.0 {
                    sv.ln() + self.log_scale
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }
}

/// Solves `phi^s = mass` in log domain given the descending log singular
/// values of the projected product. Walks partial sums `c_j`; the first
/// segment whose endpoint drops below `log_mass` contains the root. When no
/// partial sum does (including the zero-mass case `log_mass = -inf`), the
/// exponent saturates at `k`.
fn solve_exponent(log_svs: &[f64], log_mass: f64, k: usize) -> f64 {
    debug_assert_eq!(log_svs.len(), k);
    let mut cum = 0.0;
    for (j, &lv) in log_svs.iter().enumerate() {
        let next = cum + lv;
        if next < log_mass {
            let frac = if lv == f64::NEG_INFINITY {
                0.0
            } else {
                ((log_mass - cum) / lv).clamp(0.0, 1.0)
            };
            return j as f64 + frac;
        }
        cum = next;
    }
    k as f64
}

fn check_subspace(t: &MatrixTuple, w: &Subspace) -> Result<()> {
    if w.ambient_dim() != t.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace lives in dimension {} but the maps act on dimension {}",
            w.ambient_dim(),
            t.dim()
        )));
    }
    if w.dim() == 0 {
        return Err(Error::InvalidInput(
            "target subspace must have positive dimension".into(),
        ));
    }
    Ok(())
}

/// The local exponent of a single word: the `s` with
/// `phi^s(B^T T_I) = mu([I])`, saturating at `dim W`.
pub fn s_n(mu: &MeasureSpec, t: &MatrixTuple, w: &Subspace, word: &[u8]) -> Result<LocalExponent> {
    check_measure_tuple(t, mu)?;
    check_subspace(t, w)?;
    if word.is_empty() {
        return Err(Error::InvalidInput("word must be non-empty".into()));
    }
    let log_mass = log_cylinder_mass(mu, word)?;
    let k = w.dim();
    if log_mass == f64::NEG_INFINITY {
        return Ok(LocalExponent {
            value: k as f64,
            zero_mass: true,
        });
    }
    let mut trace = ProjectedTrace::new(w);
    for &s in word {
        trace.push(t.matrix(s));
    }
    let value = solve_exponent(&trace.log_singular_values(), log_mass, k);
    Ok(LocalExponent {
        value,
        zero_mass: false,
    })
}

/// Convergence trace of local exponents along prefixes of one path.
#[derive(Debug, Clone)]
pub struct STrace {
    /// `(prefix length, exponent)` at each scheduled checkpoint.
    pub trace: Vec<(usize, f64)>,
    /// Exponent at the last checkpoint.
    pub estimate: f64,
    /// Max minus min over the final third of the checkpoints; a crude
    /// flatness measure of the tail.
    pub oscillation: f64,
    /// True when some prefix had zero mass; exponents saturate at `dim W`
    /// from that point on.
    pub zero_mass: bool,
}

fn validate_trace_schedule(schedule: &[usize], path_len: usize) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("schedule must be non-empty".into()));
    }
    if schedule[0] == 0 {
        return Err(Error::InvalidInput(
            "schedule entries must be positive".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "schedule must be strictly increasing".into(),
        ));
    }
    let last = *schedule.last().expect("non-empty");
    if last > path_len {
        return Err(Error::InvalidInput(format!(
            "schedule ends at {last} but the path has only {path_len} symbols"
        )));
    }
    Ok(())
}

/// Local exponents along prefixes of `path` at the given checkpoint
/// lengths. The product and the cylinder mass are both extended
/// incrementally, so the whole trace costs one pass over the path.
pub fn s_limit(
    mu: &MeasureSpec,
    t: &MatrixTuple,
    w: &Subspace,
    path: &[u8],
    schedule: &[usize],
) -> Result<STrace> {
    check_measure_tuple(t, mu)?;
    check_subspace(t, w)?;
    mu.validate_word(path)?;
    validate_trace_schedule(schedule, path.len())?;

    let k = w.dim();
    let mut trace = Vec::with_capacity(schedule.len());
    let mut product = ProjectedTrace::new(w);
    let mut log_mass = 0.0;
    let mut zero_mass = false;
    let mut prev: Option<u8> = None;
    let mut next_checkpoint = 0;
    for (j, &s) in path.iter().enumerate() {
        let p = match prev {
            None => mu.weight(s),
            Some(q) => mu.step_prob(q, s),
        };
        if p > 0.0 {
            log_mass += p.ln();
        } else {
            log_mass = f64::NEG_INFINITY;
            zero_mass = true;
        }
        prev = Some(s);
        product.push(t.matrix(s));
        if j + 1 == schedule[next_checkpoint] {
            let value = if log_mass == f64::NEG_INFINITY {
                k as f64
            } else {
                solve_exponent(&product.log_singular_values(), log_mass, k)
            };
            trace.push((j + 1, value));
            next_checkpoint += 1;
            if next_checkpoint == schedule.len() {
                break;
            }
        }
    }

    let estimate = trace.last().expect("non-empty schedule").1;
    let tail_start = 2 * trace.len() / 3;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(_, v) in &trace[tail_start..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(STrace {
        trace,
        estimate,
        oscillation: hi - lo,
        zero_mass,
    })
}

/// Final exponent and tail diagnostics of one sampled path.
#[derive(Debug, Clone, Copy)]
pub struct SampleRecord {
    /// Which sample stream produced the path.
    pub sample_index: u64,
    /// Exponent at the full path length.
    pub s: f64,
    /// Tail oscillation of the per-path trace.
    pub oscillation: f64,
    /// True when the sampled path left the measure's support.
    pub zero_mass: bool,
}

/// A group of sampled exponents closer than the clustering tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Cluster {
    /// Mean of the member exponents.
    pub center: f64,
    /// Number of members.
    pub count: usize,
    /// Max minus min over the members.
    pub spread: f64,
}

/// Sampled exponent profile: per-path records, the observed extremes, and
/// the clusters the values fall into.
#[derive(Debug, Clone)]
pub struct SProfile {
    /// One record per sampled path, in sample order.
    pub records: Vec<SampleRecord>,
    /// Smallest sampled exponent.
    pub s_lower: f64,
    /// Largest sampled exponent.
    pub s_upper: f64,
    /// Clusters in ascending order of center.
    pub clusters: Vec<Cluster>,
    /// Tolerance used to join values into clusters.
    pub cluster_tol: f64,
}

/// Eight checkpoints evenly spaced up to `n`, deduplicated for tiny `n`.
fn default_schedule(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(8);
    for i in 1..=8usize {
        let point = (n * i).div_ceil(8);
        if out.last() != Some(&point) {
            out.push(point);
        }
    }
    out
}

/// Greedy single-pass clustering of ascending values: each value joins the
/// current cluster while it stays within `tol` of the running mean.
fn build_clusters(sorted: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let first = sorted[i];
        let mut sum = first;
        let mut count = 1usize;
        let mut last = first;
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] - sum / count as f64 <= tol {
            sum += sorted[j];
            last = sorted[j];
            count += 1;
            j += 1;
        }
        out.push(Cluster {
            center: sum / count as f64,
            count,
            spread: last - first,
        });
        i = j;
    }
    out
}

/// Samples `samples` paths of length `n` and reports the extremes and
/// clusters of their local exponents. Sample `i` always draws from stream
/// `i` of the seeded generator, so results do not depend on thread count.
/// The total work `samples * n` is charged against the tuple's visit
/// budget.
pub fn s_extremes(
    mu: &MeasureSpec,
    t: &MatrixTuple,
    w: &Subspace,
    samples: usize,
    n: usize,
    seed: u64,
) -> Result<SProfile> {
    check_measure_tuple(t, mu)?;
    check_subspace(t, w)?;
    if samples == 0 || n == 0 {
        return Err(Error::InvalidInput(
            "sample count and path length must be positive".into(),
        ));
    }
    let work = (samples as u64).saturating_mul(n as u64);
    if work > t.visit_budget() {
        return Err(Error::ResourceLimit(format!(
            "{samples} paths of length {n} need {work} steps, over the budget of {}",
            t.visit_budget()
        )));
    }
    let sampler = PathSampler::new(mu)?;
    let schedule = default_schedule(n);
    let records: Vec<SampleRecord> = map_indexed(samples, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let path = sampler.sample(&mut rng, n);
        let trace = s_limit(mu, t, w, &path, &schedule)?;
        Ok(SampleRecord {
            sample_index: i as u64,
            s: trace.estimate,
            oscillation: trace.oscillation,
            zero_mass: trace.zero_mass,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut values: Vec<f64> = records.iter().map(|r| r.s).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("exponents are never NaN"));
    let s_lower = values[0];
    let s_upper = *values.last().expect("at least one sample");
    let max_osc = records
        .iter()
        .map(|r| r.oscillation)
        .fold(0.0f64, f64::max);
    let cluster_tol = CLUSTER_TOL_FLOOR.max(2.0 * max_osc);
    let clusters = build_clusters(&values, cluster_tol);
    Ok(SProfile {
        records,
        s_lower,
        s_upper,
        clusters,
        cluster_tol,
    })
}

/// Closed-form exponent from entropy and a Lyapunov spectrum: with pivot
/// positions `p_1 < ... < p_k` selecting exponents of the spectrum, walks
/// the partial sums `G(j) = sum_{i <= j} lambda_{p_i}` and returns the root
/// of `h + G(j) + (s - j) lambda_{p_{j+1}}` in the first segment where the
/// sum turns negative, clamped at `k` when it never does.
pub fn s_via_gamma(
    h: f64,
    spectrum: &LyapunovSpectrum,
    pivots: &PivotVector,
    k: usize,
) -> Result<f64> {
    if !h.is_finite() || h < 0.0 {
        return Err(Error::InvalidInput(format!(
            "entropy must be finite and nonnegative, got {h}"
        )));
    }
    if k == 0 || pivots.rank() != k {
        return Err(Error::InvalidInput(format!(
            "pivot vector has rank {} but the subspace dimension is {k}",
            pivots.rank()
        )));
    }
    let lambda = &spectrum.exponents;
    if lambda.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput(
            "exponents must be sorted in decreasing order".into(),
        ));
    }
    let mut g = 0.0;
    for (j, &p) in pivots.positions().iter().enumerate() {
        if p > lambda.len() {
            return Err(Error::InvalidInput(format!(
                "pivot position {p} exceeds the {} available exponents",
                lambda.len()
            )));
        }
        let lam = lambda[p - 1];
        if !lam.is_finite() || lam >= 0.0 {
            return Err(Error::InvalidInput(format!(
                "exponent at pivot position {p} must be finite and negative, got {lam}"
            )));
        }
        if h + g + lam < 0.0 {
            return Ok(j as f64 + (h + g) / (-lam));
        }
        g += lam;
    }
    Ok(k as f64)
}

/// Result of scanning `mu([IJ]) / (mu([I]) mu([J]))` over word pairs.
#[derive(Debug, Clone)]
pub struct SupermultReport {
    /// Smallest ratio seen over pairs with positive denominator.
    pub constant: f64,
    /// Number of pairs with positive denominator.
    pub pairs_tested: usize,
    /// How many of those pairs had zero concatenated mass.
    pub zero_pair_count: usize,
    /// Up to 16 example pairs with zero concatenated mass.
    pub zero_pairs: Vec<(Word, Word)>,
}

/// Scans all pairs of words up to `max_len` for the supermultiplicativity
/// constant `C` with `mu([IJ]) >= C mu([I]) mu([J])`. A positive constant
/// licenses subadditivity arguments along the measure; a zero constant
/// exhibits concrete failing pairs.
pub fn check_supermultiplicative(mu: &MeasureSpec, max_len: usize) -> Result<SupermultReport> {
    if max_len == 0 {
        return Err(Error::InvalidInput(
            "maximum word length must be positive".into(),
        ));
    }
    let m = mu.m();
    let mut total: u64 = 0;
    let mut pow: u64 = 1;
    for _ in 0..max_len {
        pow = pow.saturating_mul(m as u64);
        total = total.saturating_add(pow);
    }
    if total.saturating_mul(total) > SUPERMULT_PAIR_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "{total} words up to length {max_len} give {} pairs, over the budget of {SUPERMULT_PAIR_BUDGET}",
            total.saturating_mul(total)
        )));
    }

    let mut words: Vec<Vec<u8>> = Vec::with_capacity(total as usize);
    let mut level: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * m);
        for w in &level {
            for s in 1..=m as u8 {
                let mut extended = w.clone();
                extended.push(s);
                next.push(extended);
            }
        }
        words.extend(next.iter().cloned());
        level = next;
    }
    let masses: Vec<f64> = words
        .iter()
        .map(|w| cylinder_mass(mu, w))
        .collect::<Result<Vec<_>>>()?;

    let mut constant = f64::INFINITY;
    let mut pairs_tested = 0;
    let mut zero_pair_count = 0;
    let mut zero_pairs = Vec::new();
    let mut concat = Vec::new();
    for (i, left) in words.iter().enumerate() {
        if masses[i] == 0.0 {
            continue;
        }
        for (j, right) in words.iter().enumerate() {
            if masses[j] == 0.0 {
                continue;
            }
            concat.clear();
            concat.extend_from_slice(left);
            concat.extend_from_slice(right);
            let joint = cylinder_mass(mu, &concat)?;
            let ratio = joint / (masses[i] * masses[j]);
            pairs_tested += 1;
            if joint == 0.0 {
                zero_pair_count += 1;
                if zero_pairs.len() < ZERO_PAIR_CAP {
                    zero_pairs.push((Word::new(left.clone(), m)?, Word::new(right.clone(), m)?));
                }
            }
            if ratio < constant {
                constant = ratio;
            }
        }
    }
    Ok(SupermultReport {
        constant,
        pairs_tested,
        zero_pair_count,
        zero_pairs,
    })
}
