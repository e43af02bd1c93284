//! Randomized laws of the public surface: inequalities and identities that
//! must hold for every valid input, checked on generated matrices, words,
//! measures, and subspaces. Statistical agreement checks (Monte Carlo vs
//! exact values) live in the seeded acceptance suite instead, since they
//! need fixed seeds to be reproducible.

use proptest::prelude::*;

use affdim::attractor::{chaos_game, IFSInstance};
use affdim::criteria::orbit_span;
use affdim::ergodic::{cylinder_mass, entropy, lyapunov_mc, s_n, MeasureSpec, SpectrumMode};
use affdim::linalg::{
    exterior_power, pivot_vector, singular_values, svf, svf_via_wedge, Matrix, Subspace,
};
use affdim::pressure::{phi_sum_rate, psi_sum_rate, psi_value};
use affdim::words::{fold_words, word_product, MatrixTuple};

// ---- generators -------------------------------------------------------

/// Raw d x d entries in [-1, 1]; the matrix is built in the test body.
fn entries(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, d), d)
}

fn square(d_max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=d_max).prop_flat_map(entries)
}

fn square_pair(d_max: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1..=d_max).prop_flat_map(|d| (entries(d), entries(d)))
}

fn mat(rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

/// Rescales to the requested operator norm; None when the draw is too
/// degenerate to rescale meaningfully.
fn contraction(rows: &[Vec<f64>], norm: f64) -> Option<Matrix> {
    let a = mat(rows);
    let n = a.op_norm();
    if n < 1e-3 {
        return None;
    }
    let b = a.scaled(norm / n);
    if b.det().abs() < 1e-12 {
        return None;
    }
    Some(b)
}

/// Data for a contracting tuple: d, per-matrix entries, per-matrix norms.
fn tuple_data() -> impl Strategy<Value = (Vec<Vec<Vec<f64>>>, Vec<f64>)> {
    (2..=3usize, 2..=3usize).prop_flat_map(|(d, m)| {
        (
            prop::collection::vec(entries(d), m),
            prop::collection::vec(0.25..=0.55f64, m),
        )
    })
}

fn build_tuple(mats: &[Vec<Vec<f64>>], norms: &[f64]) -> Option<MatrixTuple> {
    let built: Option<Vec<Matrix>> =
        mats.iter().zip(norms).map(|(rows, &n)| contraction(rows, n)).collect();
    MatrixTuple::new(built?).ok()
}

/// Folds arbitrary symbols into the alphabet {1, ..., m}.
fn into_alphabet(raw: &[u8], m: usize) -> Vec<u8> {
    raw.iter().map(|&v| ((v - 1) % m as u8) + 1).collect()
}

// ---- singular value function laws -------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn svf_is_submultiplicative((a_rows, b_rows) in square_pair(5), u in 0.0..=1.0f64) {
        let a = mat(&a_rows);
        let b = mat(&b_rows);
        let s = u * a.rows() as f64;
        let fa = svf(&a, s).unwrap();
        let fb = svf(&b, s).unwrap();
        let fab = svf(&a.mul(&b), s).unwrap();
        prop_assume!(fa > 1e-12 && fb > 1e-12 && fab > 1e-12);
        prop_assert!(fab.ln() <= fa.ln() + fb.ln() + 1e-9);
    }

    #[test]
    fn svf_interpolates_between_extreme_singular_values(
        a_rows in square(5),
        u in 0.0..=1.0f64,
        v in 0.0..=1.0f64,
    ) {
        let a = mat(&a_rows);
        let d = a.rows() as f64;
        let s = u * d;
        let t_extra = v * (d - s);
        prop_assume!(t_extra > 1e-9);
        let sv = singular_values(&a);
        let fa = svf(&a, s).unwrap();
        let fat = svf(&a, s + t_extra).unwrap();
        prop_assume!(fa > 1e-12);
        let alpha_top = sv[0];
        let alpha_bot = sv[sv.len() - 1];
        let lo = fa.ln() + t_extra * alpha_bot.ln();
        let hi = fa.ln() + t_extra * alpha_top.ln();
        prop_assert!(lo <= fat.ln() + 1e-9, "lower sandwich: {lo} vs {}", fat.ln());
        prop_assert!(fat.ln() <= hi + 1e-9, "upper sandwich: {} vs {hi}", fat.ln());
    }

    #[test]
    fn svf_agrees_with_its_wedge_form(a_rows in square(5), u in 0.0..=1.0f64) {
        let a = mat(&a_rows);
        let s = u * a.rows() as f64;
        let direct = svf(&a, s).unwrap();
        let wedged = svf_via_wedge(&a, s).unwrap();
        let scale = direct.abs().max(wedged.abs()).max(1.0);
        prop_assert!((direct - wedged).abs() <= 1e-9 * scale);
    }

    #[test]
    fn svf_of_the_transpose_matches(a_rows in square(5), u in 0.0..=1.0f64) {
        let a = mat(&a_rows);
        let s = u * a.rows() as f64;
        let fa = svf(&a, s).unwrap();
        let ft = svf(&a.transpose(), s).unwrap();
        prop_assert!((fa - ft).abs() <= 1e-10 * fa.abs().max(ft.abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn wedge_of_a_product_factors((a_rows, b_rows) in square_pair(4), kf in 0.0..=1.0f64) {
        let a = mat(&a_rows);
        let b = mat(&b_rows);
        let d = a.rows();
        let k = 1 + ((kf * (d as f64 - 1.0)).floor() as usize).min(d - 1);
        let lhs = exterior_power(&a.mul(&b), k).unwrap();
        let rhs = exterior_power(&a, k).unwrap().mul(&exterior_power(&b, k).unwrap());
        for r in 0..lhs.rows() {
            for c in 0..lhs.cols() {
                let (x, y) = (lhs.get(r, c), rhs.get(r, c));
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn wedge_norm_is_the_product_of_top_singular_values(
        a_rows in square(4),
        kf in 0.0..=1.0f64,
    ) {
        let a = mat(&a_rows);
        let d = a.rows();
        let k = 1 + ((kf * (d as f64 - 1.0)).floor() as usize).min(d - 1);
        let got = exterior_power(&a, k).unwrap().op_norm();
        let expected: f64 = singular_values(&a)[..k].iter().product();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.max(1e-12));
    }

    #[test]
    fn wedge_commutes_with_transpose(a_rows in square(4), kf in 0.0..=1.0f64) {
        let a = mat(&a_rows);
        let d = a.rows();
        let k = 1 + ((kf * (d as f64 - 1.0)).floor() as usize).min(d - 1);
        let lhs = exterior_power(&a.transpose(), k).unwrap();
        let rhs = exterior_power(&a, k).unwrap().transpose();
        for r in 0..lhs.rows() {
            for c in 0..lhs.cols() {
                let (x, y) = (lhs.get(r, c), rhs.get(r, c));
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projecting_before_svf_is_sandwiched_by_the_extreme_singular_values(
        data in (2..=4usize).prop_flat_map(|d| {
            (
                entries(d),
                (1..d).prop_flat_map(move |k| {
                    prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, d), k)
                }),
            )
        }),
        u in 0.05..=1.0f64,
    ) {
        let (a_rows, w_vecs) = data;
        let a = mat(&a_rows);
        let d = a.rows();
        prop_assume!(a.det().abs() > 1e-6);
        let k = w_vecs.len();
        let w = match Subspace::from_spanning(d, &w_vecs) {
            Ok(w) if w.dim() == k => w,
            _ => return Err(TestCaseError::reject("degenerate span")),
        };
        let ap = a.mul(&w.projector());
        let s = u * k as f64;
        let fap = svf(&ap, s).unwrap();
        let fa = svf(&a, s).unwrap();
        let alpha_bot = *singular_values(&a).last().unwrap();
        prop_assert!(fap > 0.0);
        prop_assert!(s * alpha_bot.ln() <= fap.ln() + 1e-9);
        prop_assert!(fap.ln() <= fa.ln() + 1e-9);
        // Rank k kills every singular value beyond the k-th; exponents past k
        // see only numerical zeros. (A tiny rounding residue raised to a small
        // fractional power is not exactly zero, so the collapse is asserted on
        // the singular values, not on svf itself.)
        let sv_ap = singular_values(&ap);
        for value in &sv_ap[k..] {
            prop_assert!(*value <= 1e-12 * sv_ap[0].max(1.0));
        }
    }

    #[test]
    fn pivot_positions_ignore_the_choice_of_spanning_set(
        data in (2..=6usize).prop_flat_map(|d| {
            (1..=d).prop_flat_map(move |k| {
                (
                    prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, d), k),
                    prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, k), k),
                    entries(d),
                )
            })
        }),
    ) {
        let (vecs, combo, basis_rows) = data;
        let d = vecs[0].len();
        let k = vecs.len();
        let span = Matrix::from_cols(d, &vecs).unwrap();
        prop_assume!(span.min_singular_value() > 0.1);
        let c = mat(&combo);
        prop_assume!(c.det().abs() > 0.1);
        let basis = mat(&basis_rows);
        prop_assume!(basis.min_singular_value() > 0.05);

        // Second spanning set: invertible recombination of the first.
        let mixed: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                (0..d)
                    .map(|r| (0..k).map(|i| c.get(i, j) * vecs[i][r]).sum())
                    .collect()
            })
            .collect();
        let w1 = Subspace::from_spanning(d, &vecs).unwrap();
        let w2 = Subspace::from_spanning(d, &mixed).unwrap();
        prop_assert_eq!(w2.dim(), k);
        prop_assert!(w1.distance(&w2) < 1e-8);

        let p1 = pivot_vector(&w1, &basis).unwrap();
        let p2 = pivot_vector(&w2, &basis).unwrap();
        prop_assert_eq!(p1.positions(), p2.positions());
    }
}

// ---- symbolic words and streamed products -----------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn word_products_compose(
        (mats, norms) in tuple_data(),
        raw_i in prop::collection::vec(1..=3u8, 1..=5),
        raw_j in prop::collection::vec(1..=3u8, 1..=5),
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let i = into_alphabet(&raw_i, t.m());
        let j = into_alphabet(&raw_j, t.m());
        let mut ij = i.clone();
        ij.extend_from_slice(&j);
        let joint = word_product(&t, &ij).unwrap();
        let split = word_product(&t, &i).unwrap().mul(&word_product(&t, &j).unwrap());
        for r in 0..joint.rows() {
            for c in 0..joint.cols() {
                prop_assert!((joint.get(r, c) - split.get(r, c)).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_words_streams_every_word_once_in_order(
        (mats, norms) in tuple_data(),
        n in 1..=4usize,
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let visited = fold_words(
            &t,
            n,
            Vec::new(),
            &|word: &[u8], product: &Matrix| vec![(word.to_vec(), product.clone())],
            &|mut a: Vec<(Vec<u8>, Matrix)>, b| {
                a.extend(b);
                a
            },
        )
        .unwrap();
        prop_assert_eq!(visited.len(), t.m().pow(n as u32));
        for pair in visited.windows(2) {
            prop_assert!(pair[0].0 < pair[1].0, "lexicographic visit order");
        }
        for (word, streamed) in &visited {
            let scratch = word_product(&t, word).unwrap();
            for r in 0..scratch.rows() {
                for c in 0..scratch.cols() {
                    prop_assert!((streamed.get(r, c) - scratch.get(r, c)).abs() <= 1e-12);
                }
            }
        }
    }
}

// ---- pressure rates ----------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rate_drops_sit_between_the_extreme_contraction_rates(
        (mats, norms) in tuple_data(),
        angle in 0.0..=3.1f64,
        u1 in 0.0..=1.0f64,
        u2 in 0.0..=1.0f64,
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let w = if d == 2 {
            Subspace::from_spanning(2, &[vec![angle.cos(), angle.sin()]]).unwrap()
        } else {
            Subspace::axis(d, 0)
        };
        let n = 4;
        for (cap, sub) in [(d as f64, None), (w.dim() as f64, Some(&w))] {
            let (mut t1, mut t2) = (u1 * cap, u2 * cap);
            if t1 > t2 {
                std::mem::swap(&mut t1, &mut t2);
            }
            prop_assume!(t2 - t1 > 1e-6);
            let r1 = phi_sum_rate(&t, sub, t1, n).unwrap();
            let r2 = phi_sum_rate(&t, sub, t2, n).unwrap();
            let drop = r1 - r2;
            let width = t2 - t1;
            prop_assert!(drop >= width * (1.0 / t.alpha_plus()).ln() - 1e-9);
            prop_assert!(drop <= width * (1.0 / t.alpha_minus()).ln() + 1e-9);
        }
    }

    #[test]
    fn phi_rates_never_exceed_psi_rates(
        (mats, norms) in tuple_data(),
        angle in 0.0..=3.1f64,
        u in 0.0..=1.0f64,
        depth in 0..=2usize,
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let w = if d == 2 {
            Subspace::from_spanning(2, &[vec![angle.cos(), angle.sin()]]).unwrap()
        } else {
            Subspace::axis(d, 0)
        };
        let s = u * w.dim() as f64;
        let phi = phi_sum_rate(&t, Some(&w), s, 4).unwrap();
        let psi = psi_sum_rate(&t, &w, s, 4, depth).unwrap();
        prop_assert!(phi <= psi + 1e-9, "phi {phi} vs psi {psi} at depth {depth}");
    }

    #[test]
    fn psi_values_grow_with_the_search_depth(
        (mats, norms) in tuple_data(),
        angle in 0.0..=3.1f64,
        u in 0.0..=1.0f64,
        raw in prop::collection::vec(1..=3u8, 1..=4),
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let w = if d == 2 {
            Subspace::from_spanning(2, &[vec![angle.cos(), angle.sin()]]).unwrap()
        } else {
            Subspace::axis(d, 0)
        };
        let s = u * w.dim() as f64;
        let word = into_alphabet(&raw, t.m());
        let mut prev = psi_value(&t, &w, s, &word, 0).unwrap();
        for depth in 1..=2 {
            let next = psi_value(&t, &w, s, &word, depth).unwrap();
            prop_assert!(next >= prev - 1e-12);
            prev = next;
        }
    }
}

// ---- measures and exponents --------------------------------------------

/// Strictly positive stochastic rows plus the matching stationary vector.
fn markov_data() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=3usize).prop_flat_map(|m| {
        prop::collection::vec(prop::collection::vec(0.2..=1.0f64, m), m)
    })
}

fn build_markov(raw_rows: &[Vec<f64>]) -> MeasureSpec {
    let m = raw_rows.len();
    let rows: Vec<Vec<f64>> = raw_rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    // Power iteration; strictly positive rows make this converge far below
    // the stationarity tolerance in a few hundred steps.
    let mut p = vec![1.0 / m as f64; m];
    for _ in 0..400 {
        let mut next = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                next[j] += p[i] * rows[i][j];
            }
        }
        let s: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= s;
        }
        p = next;
    }
    MeasureSpec::markov(p, rows).unwrap()
}

fn build_bernoulli(raw: &[f64]) -> MeasureSpec {
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let head: f64 = p[..p.len() - 1].iter().sum();
    let last = p.len() - 1;
    p[last] = 1.0 - head;
    MeasureSpec::bernoulli(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn markov_cylinder_masses_are_stationary(
        raw_rows in markov_data(),
        raw_word in prop::collection::vec(1..=3u8, 1..=6),
    ) {
        let mu = build_markov(&raw_rows);
        let m = mu.m();
        let word = into_alphabet(&raw_word, m);
        let mass = cylinder_mass(&mu, &word).unwrap();
        let extended: f64 = (1..=m as u8)
            .map(|j| {
                let mut w = word.clone();
                w.push(j);
                cylinder_mass(&mu, &w).unwrap()
            })
            .sum();
        prop_assert!((extended - mass).abs() <= 1e-12);
    }

    #[test]
    fn entropy_lies_between_zero_and_log_m(
        raw_rows in markov_data(),
        raw_p in prop::collection::vec(0.1..=1.0f64, 2..=4),
    ) {
        let markov = build_markov(&raw_rows);
        let h = entropy(&markov);
        prop_assert!(h >= -1e-12 && h <= (markov.m() as f64).ln() + 1e-12);

        let bernoulli = build_bernoulli(&raw_p);
        let h = entropy(&bernoulli);
        prop_assert!(h >= -1e-12 && h <= (bernoulli.m() as f64).ln() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_exponents_are_ordered_and_bounded_by_the_extreme_contractions(
        (mats, norms) in tuple_data(),
        raw_p in prop::collection::vec(0.1..=1.0f64, 3),
        seed in 0..u64::MAX / 2,
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let mu = build_bernoulli(&raw_p[..t.m()]);
        let spec = lyapunov_mc(&t, &mu, 400, 8, seed).unwrap();
        prop_assert_eq!(spec.exponents.len(), t.dim());
        prop_assert!(matches!(spec.mode, SpectrumMode::MonteCarlo));
        for pair in spec.exponents.windows(2) {
            prop_assert!(pair[0] >= pair[1] - 1e-12, "non-increasing spectrum");
        }
        for (i, lambda) in spec.exponents.iter().enumerate() {
            prop_assert!(*lambda <= t.alpha_plus().ln() + 1e-9);
            prop_assert!(*lambda >= t.alpha_minus().ln() - 1e-9);
            prop_assert!(spec.stderr[i] >= 0.0);
        }
        // Per path the exponent sum is an average of one-step log
        // determinants, so it can never leave their range.
        let sum: f64 = spec.exponents.iter().sum();
        let dets: Vec<f64> = t.matrices().iter().map(|m| m.det().abs().ln()).collect();
        let lo = dets.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = dets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sum >= lo - 1e-9 && sum <= hi + 1e-9);
    }

    #[test]
    fn local_exponents_stay_within_the_line_dimension(
        (mats, norms) in tuple_data(),
        raw_p in prop::collection::vec(0.1..=1.0f64, 3),
        angle in 0.0..=3.1f64,
        raw_word in prop::collection::vec(1..=3u8, 5..=40),
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let w = if d == 2 {
            Subspace::from_spanning(2, &[vec![angle.cos(), angle.sin()]]).unwrap()
        } else {
            Subspace::axis(d, 0)
        };
        let mu = build_bernoulli(&raw_p[..t.m()]);
        let word = into_alphabet(&raw_word, t.m());
        let exponent = s_n(&mu, &t, &w, &word).unwrap();
        prop_assert!(!exponent.zero_mass, "positive Bernoulli weights have full support");
        prop_assert!(exponent.value >= -1e-12);
        prop_assert!(exponent.value <= w.dim() as f64 + 1e-12);
    }
}

// ---- attractor sampling -------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chaos_game_points_stay_inside_the_bounding_ball(
        (mats, norms) in tuple_data(),
        raw_shifts in prop::collection::vec(prop::collection::vec(-1.0..=1.0f64, 3), 3),
        seed in 0..u64::MAX / 2,
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let m = t.m();
        let shifts: Vec<Vec<f64>> = raw_shifts[..m].iter().map(|s| s[..d].to_vec()).collect();
        let mu = MeasureSpec::uniform_bernoulli(m).unwrap();
        let ifs = IFSInstance::new(t, shifts).unwrap();
        let radius = ifs.bounding_radius();
        let cloud = chaos_game(&ifs, &mu, 400, None, seed).unwrap();
        prop_assert_eq!(cloud.len(), 400);
        for point in cloud.points() {
            let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= radius + 1e-9, "|p| = {norm} vs radius {radius}");
        }
        let scales = ifs.default_scales().unwrap();
        for pair in scales.windows(2) {
            prop_assert!(pair[0] > pair[1] && pair[1] > 0.0, "scales strictly decreasing");
        }
    }
}

// ---- invariant subspace search ------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_spans_are_invariant_and_saturated(
        (mats, norms) in tuple_data(),
        seed_vec in prop::collection::vec(-1.0..=1.0f64, 3),
    ) {
        let t = match build_tuple(&mats, &norms) {
            Some(t) => t,
            None => return Err(TestCaseError::reject("degenerate contraction")),
        };
        let d = t.dim();
        let v0 = &seed_vec[..d];
        prop_assume!(v0.iter().map(|x| x * x).sum::<f64>() > 1e-4);
        let w = Subspace::from_spanning(d, &[v0.to_vec()]).unwrap();
        let span = orbit_span(t.matrices(), &w, None).unwrap();

        // Contains the seed line.
        for j in 0..w.dim() {
            prop_assert!(span.contains(&w.basis().col(j), 1e-8));
        }
        // One more round changes nothing.
        let again = orbit_span(t.matrices(), &span, Some(1)).unwrap();
        prop_assert_eq!(again.dim(), span.dim());
        prop_assert!(span.distance(&again) <= 1e-8);
        // Each image vector stays inside the span.
        for a in t.matrices() {
            for j in 0..span.dim() {
                let img = a.matvec(&span.basis().col(j));
                prop_assert!(span.contains(&img, 1e-8));
            }
        }
    }
}
