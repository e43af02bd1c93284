//! Shift-invariant measures on symbol sequences and the ergodic-theoretic
//! quantities built on them: entropy, Lyapunov spectra of the transpose
//! cocycle, the Lyapunov dimension, and the projected local-dimension
//! exponents along sampled paths.

mod local;
mod lyapunov;

pub use local::{
    check_supermultiplicative, s_extremes, s_limit, s_n, s_via_gamma, Cluster, LocalExponent,
    SProfile, STrace, SampleRecord, SupermultReport,
};
pub use lyapunov::{lyapunov_dim, lyapunov_exact, lyapunov_mc, LyapunovSpectrum, SpectrumMode};

use crate::error::{Error, Result};
use crate::words::Word;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PROB_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// A Bernoulli or stationary Markov measure on sequences over `{1..m}`.
///
/// Construction validates the probability invariants; the ergodicity flag
/// records whether the transition digraph restricted to the support is
/// strongly connected (Bernoulli measures are always ergodic).
#[derive(Clone, Debug)]
pub struct MeasureSpec {
    kind: Kind,
    ergodic: bool,
}

#[derive(Clone, Debug)]
enum Kind {
    Bernoulli { p: Vec<f64> },
    Markov { p: Vec<f64>, rows: Vec<Vec<f64>> },
}

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.len() > 255 {
        return Err(Error::InvalidInput(format!(
            "{what} must have between 1 and 255 entries, got {}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidInput(format!(
            "{what} entries must be finite and nonnegative"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidInput(format!(
            "{what} sums to {sum}, expected 1 within {PROB_SUM_TOL:e}"
        )));
    }
    Ok(())
}

impl MeasureSpec {
    /// Product measure with letter weights `p`.
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        check_probability_vector(&p, "letter distribution")?;
        Ok(MeasureSpec {
            kind: Kind::Bernoulli { p },
            ergodic: true,
        })
    }

    /// Uniform product measure over `m` letters.
    pub fn uniform_bernoulli(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("alphabet must be non-empty".into()));
        }
        Self::bernoulli(vec![1.0 / m as f64; m])
    }

    /// Stationary Markov measure: `p` stationary for the row-stochastic
    /// transition matrix given as `rows`.
    pub fn markov(p: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_probability_vector(&p, "stationary vector")?;
        let m = p.len();
        if rows.len() != m {
            return Err(Error::InvalidInput(format!(
                "transition matrix has {} rows, expected {m}",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "transition row {} has {} entries, expected {m}",
                    i + 1,
                    row.len()
                )));
            }
            check_probability_vector(row, &format!("transition row {}", i + 1))?;
        }
        for j in 0..m {
            let image: f64 = (0..m).map(|i| p[i] * rows[i][j]).sum();
            if (image - p[j]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidInput(format!(
                    "stationary vector is not invariant: column {} maps to {image}, expected {}",
                    j + 1,
                    p[j]
                )));
            }
        }
        let ergodic = support_strongly_connected(&p, &rows);
        Ok(MeasureSpec {
            kind: Kind::Markov { p, rows },
            ergodic,
        })
    }

    /// Alphabet size.
    pub fn m(&self) -> usize {
        match &self.kind {
            Kind::Bernoulli { p } => p.len(),
            Kind::Markov { p, .. } => p.len(),
        }
    }

    pub fn is_markov(&self) -> bool {
        matches!(self.kind, Kind::Markov { .. })
    }

    /// True when the measure is ergodic for the shift (always for
    /// Bernoulli; strong connectivity of the support digraph for Markov).
    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    /// Mass of the single-letter cylinder, 1-based symbol.
    pub fn weight(&self, symbol: u8) -> f64 {
        let i = symbol as usize - 1;
        match &self.kind {
            Kind::Bernoulli { p } => p[i],
            Kind::Markov { p, .. } => p[i],
        }
    }

    /// One-step conditional probability of `to` after `from`.
    pub fn step_prob(&self, from: u8, to: u8) -> f64 {
        match &self.kind {
            Kind::Bernoulli { p } => p[to as usize - 1],
            Kind::Markov { rows, .. } => rows[from as usize - 1][to as usize - 1],
        }
    }

    /// Letters with positive mass.
    pub fn support(&self) -> Vec<u8> {
        (1..=self.m() as u8).filter(|&i| self.weight(i) > 0.0).collect()
    }

    pub(crate) fn stationary(&self) -> &[f64] {
        match &self.kind {
            Kind::Bernoulli { p } => p,
            Kind::Markov { p, .. } => p,
        }
    }

    pub(crate) fn transition_rows(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            Kind::Markov { rows, .. } => Some(rows),
            Kind::Bernoulli { .. } => None,
        }
    }

    pub(crate) fn validate_word(&self, word: &[u8]) -> Result<()> {
        let m = self.m() as u8;
        if word.iter().any(|&s| s == 0 || s > m) {
            return Err(Error::InvalidInput(format!(
                "word contains symbols outside 1..={m}"
            )));
        }
        Ok(())
    }
}

/// Tuple and measure must share the same alphabet.
pub(crate) fn check_measure_tuple(
    t: &crate::words::MatrixTuple,
    mu: &MeasureSpec,
) -> Result<()> {
    if t.m() != mu.m() {
        return Err(Error::InvalidInput(format!(
            "tuple has {} maps but measure has {} letters",
            t.m(),
            mu.m()
        )));
    }
    Ok(())
}

fn support_strongly_connected(p: &[f64], rows: &[Vec<f64>]) -> bool {
    let m = p.len();
    let support: Vec<usize> = (0..m).filter(|&i| p[i] > 0.0).collect();
    let Some(&start) = support.first() else {
        return false;
    };
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; m];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in &support {
                let edge = if forward { rows[u][v] } else { rows[v][u] };
                if edge > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(true) == support.len() && reach(false) == support.len()
}

/// Shannon entropy rate in nats: `-sum p_i log p_i` for Bernoulli,
/// `-sum_i p_i sum_j P_ij log P_ij` for Markov. Terms with zero
/// probability contribute zero.
pub fn entropy(mu: &MeasureSpec) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    match &mu.kind {
        Kind::Bernoulli { p } => -p.iter().map(|&x| xlogx(x)).sum::<f64>(),
        Kind::Markov { p, rows } => -p
            .iter()
            .zip(rows)
            .map(|(&pi, row)| pi * row.iter().map(|&x| xlogx(x)).sum::<f64>())
            .sum::<f64>(),
    }
}

/// Mass of the cylinder set of `word`, computed as a direct product (exact
/// for short words; may underflow to zero for words of many hundreds of
/// symbols, where [`log_cylinder_mass`] is the right tool).
pub fn cylinder_mass(mu: &MeasureSpec, word: &[u8]) -> Result<f64> {
    mu.validate_word(word)?;
    let Some((&first, rest)) = word.split_first() else {
        return Ok(1.0);
    };
    let mut mass = mu.weight(first);
    let mut prev = first;
    for &s in rest {
        mass *= mu.step_prob(prev, s);
        prev = s;
    }
    Ok(mass)
}

/// `log` of the cylinder mass, negative infinity off the support.
pub fn log_cylinder_mass(mu: &MeasureSpec, word: &[u8]) -> Result<f64> {
    mu.validate_word(word)?;
    let Some((&first, rest)) = word.split_first() else {
        return Ok(0.0);
    };
    let term = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let mut acc = term(mu.weight(first));
    let mut prev = first;
    for &s in rest {
        acc += term(mu.step_prob(prev, s));
        prev = s;
    }
    Ok(acc)
}

/// Counter-based generator: one fixed key, one stream per sample index, so
/// parallel schedules cannot change what any sample sees.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Precomputed alias tables for repeated path sampling.
pub(crate) struct PathSampler {
    initial: WeightedIndex<f64>,
    rows: Option<Vec<WeightedIndex<f64>>>,
}

impl PathSampler {
    pub(crate) fn new(mu: &MeasureSpec) -> Result<Self> {
        let initial = WeightedIndex::new(mu.stationary().iter().copied())
            .map_err(|e| Error::InvalidInput(format!("letter distribution unusable: {e}")))?;
        let rows = match mu.transition_rows() {
            Some(rows) => {
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    out.push(WeightedIndex::new(row.iter().copied()).map_err(|e| {
                        Error::InvalidInput(format!("transition row {} unusable: {e}", i + 1))
                    })?);
                }
                Some(out)
            }
            None => None,
        };
        Ok(PathSampler { initial, rows })
    }

    pub(crate) fn step(&self, rng: &mut ChaCha8Rng, prev: Option<u8>) -> u8 {
        let idx = match (&self.rows, prev) {
            (Some(rows), Some(p)) => rows[p as usize - 1].sample(rng),
            _ => self.initial.sample(rng),
        };
        idx as u8 + 1
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(n);
        let mut prev = None;
        for _ in 0..n {
            let s = self.step(rng, prev);
            out.push(s);
            prev = Some(s);
        }
        out
    }
}

/// One random word of length `n` from the measure (stationary start for
/// Markov chains).
pub fn sample_path(mu: &MeasureSpec, n: usize, seed: u64) -> Result<Word> {
    if n == 0 {
        return Err(Error::InvalidInput("path length must be at least 1".into()));
    }
    let sampler = PathSampler::new(mu)?;
    let mut rng = stream_rng(seed, 0);
    Word::new(sampler.sample(&mut rng, n), mu.m())
}

/// The three-letter Markov measure paired with `words::antidiagonal_tuple`
/// in tests: p = (1/4, 1/4, 1/2), letters 1 and 2 always step to 3, letter
/// 3 steps to 1 or 2 evenly.
#[cfg(test)]
pub(crate) fn alternating_markov() -> MeasureSpec {
    MeasureSpec::markov(
        vec![0.25, 0.25, 0.5],
        vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ],
    )
    .unwrap()
}
