//! Words over a finite alphabet and tuples of contracting matrices.
//!
//! Words are sequences of 1-based symbols `1..=m` acting by left products
//! `T_I = T_{i_1} * ... * T_{i_n}`. The depth-first fold over all words of a
//! fixed length maintains one incremental product per tree level, so each
//! visited word costs a single matrix multiply.

use crate::linalg::{singular_values, Matrix, DIM_MAX};
use crate::parallel::map_indexed;
use crate::{Error, Result};

/// Default cap on the number of words visited by a single fold.
pub const DEFAULT_VISIT_BUDGET: u64 = 100_000_000;

/// Below this many top-level chunks the fold splits one more letter deep,
/// so parallel runs have enough independent branches. The chunk layout
/// depends only on `(m, n)`, never on the thread count, which keeps results
/// bit-identical across worker counts and the sequential build.
const CHUNK_MIN: u64 = 32;

/// A finite word of 1-based symbols over `{1, ..., m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<u8>,
}

impl Word {
    /// Validates that every symbol lies in `1..=m`.
    pub fn new(symbols: Vec<u8>, m: usize) -> Result<Self> {
        for (i, &s) in symbols.iter().enumerate() {
            if s == 0 || s as usize > m {
                return Err(Error::InvalidInput(format!(
                    "symbol {s} at position {i} is outside 1..={m}"
                )));
            }
        }
        Ok(Word { symbols })
    }

    pub fn empty() -> Self {
        Word { symbols: Vec::new() }
    }

    /// Parses a digit string such as `"13"`. Only alphabets up to 9 letters
    /// have this compact form.
    pub fn parse(text: &str, m: usize) -> Result<Self> {
        if m > 9 {
            return Err(Error::InvalidInput(
                "digit-string words are only defined for alphabets up to 9 letters".into(),
            ));
        }
        let mut symbols = Vec::with_capacity(text.len());
        for (i, ch) in text.chars().enumerate() {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| Error::InvalidInput(format!("non-digit character at {i}")))?;
            symbols.push(d as u8);
        }
        Word::new(symbols, m)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.symbols.iter().all(|&s| s <= 9) {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// A tuple of invertible strict contractions on `R^d`.
///
/// Construction validates shape, finiteness, strict contraction
/// (`||T_i|| < 1`) and invertibility (smallest singular value positive),
/// and caches per-letter extreme singular values.
#[derive(Debug, Clone)]
pub struct MatrixTuple {
    matrices: Vec<Matrix>,
    dim: usize,
    norms: Vec<f64>,
    min_svs: Vec<f64>,
    visit_budget: u64,
}

impl MatrixTuple {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        if matrices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a tuple needs at least 2 matrices, got {}",
                matrices.len()
            )));
        }
        if matrices.len() > u8::MAX as usize {
            return Err(Error::InvalidInput("alphabets beyond 255 letters are unsupported".into()));
        }
        let dim = matrices[0].rows();
        if dim == 0 || dim > DIM_MAX {
            return Err(Error::InvalidInput(format!(
                "ambient dimension must be in 1..={DIM_MAX}, got {dim}"
            )));
        }
        let mut norms = Vec::with_capacity(matrices.len());
        let mut min_svs = Vec::with_capacity(matrices.len());
        for (i, t) in matrices.iter().enumerate() {
            if !t.is_square() || t.rows() != dim {
                return Err(Error::InvalidInput(format!(
                    "matrix {i} is {}x{} but matrix 0 is {dim}x{dim}",
                    t.rows(),
                    t.cols()
                )));
            }
            if !t.is_finite() {
                return Err(Error::InvalidInput(format!("matrix {i} has non-finite entries")));
            }
            let sv = singular_values(t);
            let norm = sv[0];
            let min = *sv.last().expect("at least one singular value");
            if norm >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "matrix {i} is not a strict contraction (norm {norm})"
                )));
            }
            if min <= 0.0 {
                return Err(Error::InvalidInput(format!("matrix {i} is singular")));
            }
            norms.push(norm);
            min_svs.push(min);
        }
        Ok(MatrixTuple { matrices, dim, norms, min_svs, visit_budget: DEFAULT_VISIT_BUDGET })
    }

    /// Replaces the word-visit budget enforced by [`fold_words`].
    pub fn with_visit_budget(mut self, budget: u64) -> Self {
        self.visit_budget = budget.max(1);
        self
    }

    pub fn visit_budget(&self) -> u64 {
        self.visit_budget
    }

    /// Alphabet size.
    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The matrix for a 1-based symbol.
    pub fn matrix(&self, symbol: u8) -> &Matrix {
        assert!(symbol >= 1 && (symbol as usize) <= self.matrices.len(), "symbol out of range");
        &self.matrices[symbol as usize - 1]
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// Largest operator norm over the tuple.
    pub fn alpha_plus(&self) -> f64 {
        self.norms.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Smallest minimal singular value over the tuple.
    pub fn alpha_minus(&self) -> f64 {
        self.min_svs.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn norm_of(&self, symbol: u8) -> f64 {
        self.norms[symbol as usize - 1]
    }

    /// Whether `||T_i|| + ||T_j|| < 1` for every pair `i != j`, the
    /// separation condition under which box-counting experiments are
    /// expected to match the predicted dimension.
    pub fn is_transversal(&self) -> bool {
        let m = self.norms.len();
        for i in 0..m {
            for j in 0..m {
                if i != j && self.norms[i] + self.norms[j] >= 1.0 {
                    return false;
                }
            }
        }
        true
    }

    /// The tuple of transposes (same budget).
    pub fn transposed(&self) -> MatrixTuple {
        MatrixTuple {
            matrices: self.matrices.iter().map(Matrix::transpose).collect(),
            dim: self.dim,
            norms: self.norms.clone(),
            min_svs: self.min_svs.clone(),
            visit_budget: self.visit_budget,
        }
    }
}

/// Product `T_{i_1} * ... * T_{i_n}` for a word; the empty word gives the
/// identity.
pub fn word_product(tuple: &MatrixTuple, word: &[u8]) -> Result<Matrix> {
    let mut out = Matrix::identity(tuple.dim());
    let mut tmp = Matrix::zeros(tuple.dim(), tuple.dim());
    for (i, &s) in word.iter().enumerate() {
        if s == 0 || s as usize > tuple.m() {
            return Err(Error::InvalidInput(format!(
                "symbol {s} at position {i} is outside 1..={}",
                tuple.m()
            )));
        }
        out.mul_into(tuple.matrix(s), &mut tmp);
        std::mem::swap(&mut out, &mut tmp);
    }
    Ok(out)
}

/// Depth-first fold over all `m^n` words of length `n`.
///
/// `leaf` sees each word (1-based symbols, lexicographic order) together
/// with its product `T_I`; per-branch results are combined with `merge`,
/// branches are combined in lexicographic order starting from `init`. The
/// number of visited words is checked against the tuple's visit budget
/// first. With the `parallel` feature branches run on rayon; the chunk
/// layout is a fixed function of `(m, n)`, so the reduction tree and hence
/// the floating-point result never depend on the thread count.
pub fn fold_words<R, L, M>(tuple: &MatrixTuple, n: usize, init: R, leaf: &L, merge: &M) -> Result<R>
where
    R: Send,
    L: Fn(&[u8], &Matrix) -> R + Sync + Send,
    M: Fn(R, R) -> R + Sync + Send,
{
    if n == 0 {
        return Err(Error::InvalidInput("word length must be at least 1".into()));
    }
    let m = tuple.m() as u64;
    let total = (m as u128).checked_pow(n as u32);
    match total {
        Some(t) if t <= tuple.visit_budget() as u128 => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "folding {}^{n} words exceeds the visit budget {} \
                 (raise it via MatrixTuple::with_visit_budget or AFFDIM_BUDGET)",
                m,
                tuple.visit_budget()
            )));
        }
    }

    // Fixed chunking by word prefix: deep enough for useful parallelism,
    // independent of the worker count.
    let mut chunk_len = 1usize;
    while chunk_len < n && m.pow(chunk_len as u32) < CHUNK_MIN {
        chunk_len += 1;
    }
    let chunks = m.pow(chunk_len as u32) as usize;

    let results = map_indexed(chunks, |chunk| {
        // Decode the prefix as base-m digits, most significant first.
        let mut word = vec![0u8; chunk_len];
        let mut rest = chunk;
        for i in (0..chunk_len).rev() {
            word[i] = (rest % m as usize) as u8 + 1;
            rest /= m as usize;
        }
        let mut products: Vec<Matrix> = Vec::with_capacity(n + 1);
        products.push(Matrix::identity(tuple.dim()));
        for l in 0..chunk_len {
            let next = products[l].mul(tuple.matrix(word[l]));
            products.push(next);
        }
        for _ in chunk_len..n {
            products.push(Matrix::zeros(tuple.dim(), tuple.dim()));
        }
        let mut acc: Option<R> = None;
        dfs(tuple, n, chunk_len, &mut word, &mut products, leaf, merge, &mut acc);
        acc.expect("every chunk contains at least one word")
    });

    Ok(results.into_iter().fold(init, merge))
}

#[allow(clippy::too_many_arguments)]
fn dfs<R, L, M>(
    tuple: &MatrixTuple,
    n: usize,
    depth: usize,
    word: &mut Vec<u8>,
    products: &mut [Matrix],
    leaf: &L,
    merge: &M,
    acc: &mut Option<R>,
) where
    L: Fn(&[u8], &Matrix) -> R,
    M: Fn(R, R) -> R,
{
    if depth == n {
        let value = leaf(word, &products[n]);
        *acc = Some(match acc.take() {
            Some(prev) => merge(prev, value),
            None => value,
        });
        return;
    }
    for s in 1..=tuple.m() as u8 {
        word.push(s);
        let (head, tail) = products.split_at_mut(depth + 1);
        head[depth].mul_into(tuple.matrix(s), &mut tail[0]);
        dfs(tuple, n, depth + 1, word, products, leaf, merge, acc);
        word.pop();
    }
}

/// The antidiagonal three-map tuple used across the test suite:
/// `T_1 = T_2 = [[0, 2/5], [1/5, 0]]`, `T_3 = [[0, 1/5], [2/5, 0]]`.
#[cfg(test)]
pub(crate) fn antidiagonal_tuple() -> MatrixTuple {
    let mat = |rows: &[&[f64]]| {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    };
    MatrixTuple::new(vec![
        mat(&[&[0.0, 0.4], &[0.2, 0.0]]),
        mat(&[&[0.0, 0.4], &[0.2, 0.0]]),
        mat(&[&[0.0, 0.2], &[0.4, 0.0]]),
    ])
    .unwrap()
}
