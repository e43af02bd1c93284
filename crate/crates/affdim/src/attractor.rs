//! Empirical side of the toolkit: chaos-game sampling of attractors,
//! orthogonal projection of point clouds, and box-counting / local-dimension
//! estimation.
//!
//! The other modules predict dimensions from the matrices alone. This one
//! draws finite point clouds from the attractor of a concrete iterated
//! function system, projects them, and measures dimensions empirically so
//! the predictions can be checked at desk scale. All sampling is
//! deterministic in (seed, index) and independent of thread count.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ergodic::{check_measure_tuple, stream_rng, MeasureSpec, PathSampler};
use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::parallel::map_indexed;
use crate::pressure::{proj_affinity_dim, DimensionEstimate, EstimatorConfig};
use crate::words::MatrixTuple;

/// Target for the chaos-game truncation error: the default burn-in length
/// makes the neglected tail move every point by less than this.
const TRUNCATION_EPS: f64 = 1e-12;

/// Leading path symbols stored with each sampled point. Because points are
/// built by prefix composition, these are the first letters of the point's
/// address in the attractor.
const ADDRESS_PREFIX: usize = 8;

/// Relative slack for the runtime containment check on sampled points.
const CONTAINMENT_SLACK: f64 = 1e-9;

/// Grid-partition range counting is used up to this cloud dimension;
/// higher dimensions fall back to brute force.
const GRID_COUNT_DIM_MAX: usize = 3;

/// Histogram bin width for local-dimension summaries.
const LOCAL_HIST_BIN: f64 = 0.025;

fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One affine iterated function system: a contraction tuple plus one
/// translation per map, with a ball `B(0, R)` that every map sends into
/// itself.
#[derive(Clone, Debug)]
pub struct IFSInstance {
    tuple: MatrixTuple,
    translations: Vec<Vec<f64>>,
    bounding_radius: f64,
}

impl IFSInstance {
    /// Pairs a tuple with translations. The stored radius is the smallest
    /// sufficient bound `max_i |a_i| / (1 - |T_i|)`, which guarantees
    /// `f_i(B(0,R)) subset of B(0,R)` for every map.
    pub fn new(tuple: MatrixTuple, translations: Vec<Vec<f64>>) -> Result<Self> {
        if translations.len() != tuple.m() {
            return Err(Error::InvalidInput(format!(
                "tuple has {} maps but {} translations were given",
                tuple.m(),
                translations.len()
            )));
        }
        let d = tuple.dim();
        let mut radius = 0.0f64;
        for (i, a) in translations.iter().enumerate() {
            if a.len() != d {
                return Err(Error::InvalidInput(format!(
                    "translation {} has length {} but the maps act on R^{d}",
                    i + 1,
                    a.len()
                )));
            }
            if !a.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "translation {} has a non-finite entry",
                    i + 1
                )));
            }
            let denom = 1.0 - tuple.norm_of((i + 1) as u8);
            radius = radius.max(euclid_norm(a) / denom);
        }
        Ok(IFSInstance {
            tuple,
            translations,
            bounding_radius: radius,
        })
    }

    /// Same system with a larger declared radius. The radius may only be
    /// enlarged: shrinking it below the sufficient bound would break the
    /// containment invariant.
    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < self.bounding_radius {
            return Err(Error::InvalidInput(format!(
                "radius {radius} is below the containment bound {}",
                self.bounding_radius
            )));
        }
        self.bounding_radius = radius;
        Ok(self)
    }

    pub fn tuple(&self) -> &MatrixTuple {
        &self.tuple
    }

    pub fn translations(&self) -> &[Vec<f64>] {
        &self.translations
    }

    /// Radius of a ball around the origin that contains the attractor.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Default box-counting window: nine halving scales from `R/8` down to
    /// `R/2048` (a span of 2.4 decades). Errors when the radius is zero,
    /// since a single-point attractor has no meaningful scale range.
    pub fn default_scales(&self) -> Result<Vec<f64>> {
        if self.bounding_radius <= 0.0 {
            return Err(Error::InvalidInput(
                "attractor radius is zero; pass explicit scales".into(),
            ));
        }
        Ok((3..=11)
            .map(|e| self.bounding_radius / f64::from(1u32 << e))
            .collect())
    }

    /// Burn-in length making the truncation error at most `TRUNCATION_EPS`:
    /// the tail of a composition of `L` maps moves points of `B(0,R)` by at
    /// most `alpha_+^L * R`.
    fn default_burn_in(&self) -> usize {
        let r_eff = self.bounding_radius.max(1.0);
        let alpha = self.tuple.alpha_plus();
        let len = (TRUNCATION_EPS / r_eff).ln() / alpha.ln();
        (len.ceil().max(1.0)) as usize
    }

    /// `x <- T_s x + a_s` written into `out`.
    fn apply(&self, symbol: u8, x: &[f64], out: &mut [f64]) {
        let t = self.tuple.matrix(symbol);
        let a = &self.translations[symbol as usize - 1];
        let d = x.len();
        for r in 0..d {
            let mut acc = a[r];
            for (c, xv) in x.iter().enumerate() {
                acc += t.get(r, c) * xv;
            }
            out[r] = acc;
        }
    }
}

/// A finite sample of attractor (or projected attractor) points with
/// uniform weights. Points produced by the chaos game carry the leading
/// symbols of their address word; projected clouds keep them.
#[derive(Clone, Debug)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
    addresses: Option<Vec<Vec<u8>>>,
}

impl PointCloud {
    /// Wraps raw points (no addresses). All points must share one finite
    /// dimension and the cloud must be non-empty.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidInput("points must have dimension >= 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "point {i} has dimension {} but the first point has {dim}",
                    p.len()
                )));
            }
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has a non-finite entry")));
            }
        }
        Ok(PointCloud {
            points,
            dim,
            addresses: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Address prefixes, present when the cloud came from the chaos game.
    pub fn addresses(&self) -> Option<&[Vec<u8>]> {
        self.addresses.as_deref()
    }

    /// Coordinates of every point in an orthonormal basis of `w`; the
    /// result lives in `R^k` for a `k`-dimensional subspace. Addresses are
    /// carried over, since projection does not change a point's code.
    pub fn project(&self, w: &Subspace) -> Result<PointCloud> {
        if w.ambient_dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "subspace ambient dimension {} does not match cloud dimension {}",
                w.ambient_dim(),
                self.dim
            )));
        }
        let basis = w.basis();
        let k = w.dim();
        let projected = map_indexed(self.points.len(), |i| {
            let p = &self.points[i];
            (0..k)
                .map(|j| (0..self.dim).map(|r| basis.get(r, j) * p[r]).sum())
                .collect::<Vec<f64>>()
        });
        Ok(PointCloud {
            points: projected,
            dim: k,
            addresses: self.addresses.clone(),
        })
    }

    /// Per-axis (min, max) over the cloud.
    pub fn extent(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in &self.points {
            for (j, &x) in p.iter().enumerate() {
                out[j].0 = out[j].0.min(x);
                out[j].1 = out[j].1.max(x);
            }
        }
        out
    }

    /// `count` points drawn uniformly (with replacement) from the cloud,
    /// deterministic in the seed.
    pub fn sample_centers(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 0);
        (0..count)
            .map(|_| self.points[rng.gen_range(0..self.points.len())].clone())
            .collect()
    }

    /// CSV rows: coordinates, then the address-word prefix (empty for raw
    /// clouds). Symbols are concatenated digits, matching word display.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.dim {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("x{j}"));
        }
        out.push_str(",address\n");
        for (i, p) in self.points.iter().enumerate() {
            for (j, x) in p.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{x:.17e}"));
            }
            out.push(',');
            if let Some(addr) = &self.addresses {
                for s in &addr[i] {
                    out.push_str(&s.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Samples `n` attractor points. Each point is the prefix composition
/// `f_{x_1} o ... o f_{x_L}(0)` for an independent path `x` drawn from the
/// measure, so the point approximates the coding-map image of `x` with
/// truncation error at most `alpha_+^L * R`. `burn_in` overrides the
/// default `L`, which is the smallest length driving that bound below
/// 1e-12. Point `i` uses RNG stream `i` of the seed: results do not depend
/// on thread count.
pub fn chaos_game(
    ifs: &IFSInstance,
    mu: &MeasureSpec,
    n: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<PointCloud> {
    check_measure_tuple(ifs.tuple(), mu)?;
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample point".into()));
    }
    let burn = match burn_in {
        Some(0) => {
            return Err(Error::InvalidInput("burn-in must be at least 1".into()));
        }
        Some(b) => b,
        None => ifs.default_burn_in(),
    };
    let visits = (n as u64).saturating_mul(burn as u64);
    let budget = ifs.tuple().visit_budget();
    if visits > budget {
        return Err(Error::ResourceLimit(format!(
            "{n} points x burn-in {burn} needs {visits} map applications, over the budget {budget}"
        )));
    }

    let sampler = PathSampler::new(mu)?;
    let d = ifs.tuple().dim();
    let results = map_indexed(n, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let path = sampler.sample(&mut rng, burn);
        let mut cur = vec![0.0f64; d];
        let mut next = vec![0.0f64; d];
        // Apply the last symbol first so the composition reads f_{x_1} o
        // ... o f_{x_L}(0) and the path prefix is the point's address.
        for &s in path.iter().rev() {
            ifs.apply(s, &cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        let prefix = path[..ADDRESS_PREFIX.min(path.len())].to_vec();
        (cur, prefix)
    });

    let allowed = ifs.bounding_radius() * (1.0 + CONTAINMENT_SLACK) + CONTAINMENT_SLACK;
    let mut points = Vec::with_capacity(n);
    let mut addresses = Vec::with_capacity(n);
    for (p, addr) in results {
        let norm = euclid_norm(&p);
        if norm > allowed {
            return Err(Error::Inconsistent(format!(
                "sampled point at norm {norm} escaped the bounding ball of radius {}",
                ifs.bounding_radius()
            )));
        }
        points.push(p);
        addresses.push(addr);
    }
    Ok(PointCloud {
        points,
        dim: d,
        addresses: Some(addresses),
    })
}

/// Occupied-box count at one scale.
#[derive(Clone, Debug)]
pub struct ScaleCount {
    pub scale: f64,
    pub boxes: u64,
}

/// Box-counting estimate with its fit diagnostics. The slope is fitted to
/// `log N(eps)` against `log(1/eps)`; per-scale counts are reported so
/// saturation at fine scales stays visible.
#[derive(Clone, Debug)]
pub struct BoxCountReport {
    pub estimate: f64,
    pub r_squared: f64,
    pub counts: Vec<ScaleCount>,
    pub warnings: Vec<String>,
}

impl BoxCountReport {
    /// CSV table of the per-scale counts.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("scale,boxes\n");
        for c in &self.counts {
            out.push_str(&format!("{:.17e},{}\n", c.scale, c.boxes));
        }
        out
    }
}

/// Least-squares line through `(xs, ys)`: returns (slope, intercept, R^2).
/// A constant `ys` fits exactly, so its R^2 is 1 by convention.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

fn validate_scales(scales: &[f64]) -> Result<Vec<f64>> {
    let mut sorted: Vec<f64> = scales.to_vec();
    for &s in &sorted {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidInput("scales must be positive and finite".into()));
        }
    }
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted.dedup();
    if sorted.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 distinct scales, got {}",
            sorted.len()
        )));
    }
    let span = sorted[0] / sorted[sorted.len() - 1];
    if span < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "scales must span at least two decades; largest/smallest is only {span:.3}"
        )));
    }
    Ok(sorted)
}

/// Counts occupied boxes of side `scale` on the quantized integer grid.
fn occupied_boxes(points: &[Vec<f64>], scale: f64) -> u64 {
    let mut cells: std::collections::HashSet<Vec<i64>> =
        std::collections::HashSet::with_capacity(points.len().min(1 << 20));
    for p in points {
        let key: Vec<i64> = p.iter().map(|&x| (x / scale).floor() as i64).collect();
        cells.insert(key);
    }
    cells.len() as u64
}

/// Box-counting dimension estimate over the given scale window (at least
/// four distinct scales spanning two decades). A degenerate cloud, all
/// points equal, reports estimate 0 with a warning instead of an error.
pub fn box_count_dim(cloud: &PointCloud, scales: &[f64]) -> Result<BoxCountReport> {
    let sorted = validate_scales(scales)?;
    let degenerate = cloud
        .extent()
        .iter()
        .all(|&(lo, hi)| hi - lo == 0.0);
    if degenerate {
        let counts = sorted
            .iter()
            .map(|&scale| ScaleCount { scale, boxes: 1 })
            .collect();
        return Ok(BoxCountReport {
            estimate: 0.0,
            r_squared: 1.0,
            counts,
            warnings: vec!["degenerate cloud: all points coincide, estimate forced to 0".into()],
        });
    }

    let boxes = map_indexed(sorted.len(), |i| occupied_boxes(cloud.points(), sorted[i]));
    let counts: Vec<ScaleCount> = sorted
        .iter()
        .zip(&boxes)
        .map(|(&scale, &boxes)| ScaleCount { scale, boxes })
        .collect();

    let xs: Vec<f64> = counts.iter().map(|c| (1.0 / c.scale).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.boxes as f64).ln()).collect();
    let (slope, _, r2) = fit_line(&xs, &ys);

    let mut warnings = Vec::new();
    let n = cloud.len() as u64;
    if counts.last().map(|c| c.boxes) == Some(n) {
        warnings.push(format!(
            "finest scale isolates every one of the {n} points; the window has outrun the sample"
        ));
    }
    Ok(BoxCountReport {
        estimate: slope,
        r_squared: r2,
        counts,
        warnings,
    })
}

/// Uniform draw from the ball of the given radius: Gaussian direction (by
/// Box-Muller) scaled by `u^(1/d)`, valid in any dimension.
fn uniform_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let mut g = Vec::with_capacity(d + 1);
        while g.len() < d {
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            g.push(r * theta.cos());
            g.push(r * theta.sin());
        }
        g.truncate(d);
        let norm = euclid_norm(&g);
        if norm > 0.0 && norm.is_finite() {
            let u: f64 = rng.gen::<f64>();
            let scale = radius * u.powf(1.0 / d as f64) / norm;
            return g.iter().map(|x| x * scale).collect();
        }
    }
}

/// splitmix64 finalizer; used to derive independent chaos-game seeds per
/// trial so trial-level and point-level RNG streams never share a key.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One translation draw and the box-count estimate of its projected cloud.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub translations: Vec<Vec<f64>>,
    pub box_dim: f64,
    pub r_squared: f64,
}

/// Random-translation experiment results against the pressure prediction.
#[derive(Clone, Debug)]
pub struct ProjectionExperiment {
    pub records: Vec<TrialRecord>,
    pub predicted: DimensionEstimate,
    pub mean_box_dim: f64,
    pub spread: f64,
    pub transversal: bool,
    pub warnings: Vec<String>,
}

impl ProjectionExperiment {
    /// CSV table: trial, box dimension, fit quality, then the flattened
    /// translation coordinates.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,box_dim,r_squared,translations\n");
        for r in &self.records {
            let flat: Vec<String> = r
                .translations
                .iter()
                .flat_map(|a| a.iter().map(|x| format!("{x:.6}")))
                .collect();
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                r.trial,
                r.box_dim,
                r.r_squared,
                flat.join(" ")
            ));
        }
        out
    }
}

/// Draws `trials` independent translation tuples uniformly from the ball
/// of radius `translation_radius`, samples `points_per_trial` attractor
/// points for each, projects them to `w`, and box-counts the projected
/// clouds. The prediction is the projected affinity dimension computed from
/// the matrices alone. When some pair of maps has norm sum at least 1 the
/// experiment still runs, but the output is flagged: the almost-every-
/// translation prediction is not guaranteed in that regime.
pub fn projected_dim_experiment(
    t: &MatrixTuple,
    w: &Subspace,
    mu: &MeasureSpec,
    trials: usize,
    points_per_trial: usize,
    translation_radius: f64,
    seed: u64,
) -> Result<ProjectionExperiment> {
    check_measure_tuple(t, mu)?;
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    if !(translation_radius.is_finite() && translation_radius > 0.0) {
        return Err(Error::InvalidInput("translation radius must be positive".into()));
    }
    if w.ambient_dim() != t.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace lives in R^{} but the maps act on R^{}",
            w.ambient_dim(),
            t.dim()
        )));
    }

    let transversal = t.is_transversal();
    let mut warnings = Vec::new();
    if !transversal {
        warnings.push(
            "some pair of maps has norm sum >= 1: hypotheses for the almost-every-translation \
             prediction are not met, results are purely empirical"
                .into(),
        );
    }

    let predicted = proj_affinity_dim(t, w, &EstimatorConfig::default())?;

    let d = t.dim();
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial as u64);
        let translations: Vec<Vec<f64>> = (0..t.m())
            .map(|_| uniform_in_ball(&mut rng, d, translation_radius))
            .collect();
        let ifs = IFSInstance::new(t.clone(), translations.clone())?;
        let cloud = chaos_game(
            &ifs,
            mu,
            points_per_trial,
            None,
            derive_seed(seed, trial as u64 + 1),
        )?;
        let projected = cloud.project(w)?;
        let report = box_count_dim(&projected, &ifs.default_scales()?)?;
        records.push(TrialRecord {
            trial,
            translations,
            box_dim: report.estimate,
            r_squared: report.r_squared,
        });
    }

    let mean = records.iter().map(|r| r.box_dim).sum::<f64>() / trials as f64;
    let lo = records.iter().map(|r| r.box_dim).fold(f64::INFINITY, f64::min);
    let hi = records
        .iter()
        .map(|r| r.box_dim)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ProjectionExperiment {
        records,
        predicted,
        mean_box_dim: mean,
        spread: hi - lo,
        transversal,
        warnings,
    })
}

/// One histogram bin: `[lower, lower + bin_width)` and its count.
#[derive(Clone, Debug)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

/// Local-dimension slopes for a sample of centers plus their histogram.
#[derive(Clone, Debug)]
pub struct LocalDimReport {
    /// One slope per surviving center, in center order.
    pub slopes: Vec<f64>,
    /// Centers dropped because their smallest ball held no points.
    pub skipped: usize,
    pub histogram: Vec<HistogramBin>,
    pub bin_width: f64,
}

impl LocalDimReport {
    /// CSV table of the slope histogram.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_lower,count\n");
        for b in &self.histogram {
            out.push_str(&format!("{:.6},{}\n", b.lower, b.count));
        }
        out
    }
}

/// Range-counting index: a grid partition keyed by quantized coordinates
/// for low dimensions, brute force above. Built once, queried read-only.
enum RangeIndex<'a> {
    Grid {
        points: &'a [Vec<f64>],
        cells: HashMap<Vec<i64>, Vec<usize>>,
        cell: f64,
    },
    Brute {
        points: &'a [Vec<f64>],
    },
}

impl<'a> RangeIndex<'a> {
    fn build(points: &'a [Vec<f64>], dim: usize, max_radius: f64) -> Self {
        if dim > GRID_COUNT_DIM_MAX {
            return RangeIndex::Brute { points };
        }
        let cell = max_radius;
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key: Vec<i64> = p.iter().map(|&x| (x / cell).floor() as i64).collect();
            cells.entry(key).or_default().push(i);
        }
        RangeIndex::Grid { points, cells, cell }
    }

    /// Counts of points within each radius of `center`; `radii` must be
    /// sorted descending, and the largest must not exceed the build radius.
    fn ball_counts(&self, center: &[f64], radii: &[f64]) -> Vec<u64> {
        let mut counts = vec![0u64; radii.len()];
        let mut tally = |p: &[f64]| {
            let dist = p
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            for (j, &r) in radii.iter().enumerate() {
                if dist <= r {
                    counts[j] += 1;
                } else {
                    break;
                }
            }
        };
        match self {
            RangeIndex::Brute { points } => {
                for p in *points {
                    tally(p);
                }
            }
            RangeIndex::Grid { points, cells, cell } => {
                let d = center.len();
                let base: Vec<i64> = center.iter().map(|&x| (x / cell).floor() as i64).collect();
                let mut offsets = vec![0i64; d];
                // Walk the 3^d neighborhood of the center's cell; every
                // point within max radius lies in one of those cells.
                fn visit(
                    base: &[i64],
                    offsets: &mut Vec<i64>,
                    axis: usize,
                    cells: &HashMap<Vec<i64>, Vec<usize>>,
                    points: &[Vec<f64>],
                    tally: &mut dyn FnMut(&[f64]),
                ) {
                    if axis == base.len() {
                        let key: Vec<i64> = base
                            .iter()
                            .zip(offsets.iter())
                            .map(|(b, o)| b + o)
                            .collect();
                        if let Some(idx) = cells.get(&key) {
                            for &i in idx {
                                tally(&points[i]);
                            }
                        }
                        return;
                    }
                    for o in -1..=1 {
                        offsets[axis] = o;
                        visit(base, offsets, axis + 1, cells, points, tally);
                    }
                }
                visit(&base, &mut offsets, 0, cells, points, &mut tally);
            }
        }
        counts
    }
}

/// Per-center local-dimension estimates: for each center, the
/// least-squares slope of `log(empirical ball mass)` against `log r` over
/// the given radii. Centers whose smallest ball is empty are skipped and
/// counted. Radii need at least 3 distinct positive values.
pub fn local_dim_estimate(
    cloud: &PointCloud,
    centers: &[Vec<f64>],
    radii: &[f64],
) -> Result<LocalDimReport> {
    if centers.is_empty() {
        return Err(Error::InvalidInput("need at least one center".into()));
    }
    for (i, c) in centers.iter().enumerate() {
        if c.len() != cloud.dim() {
            return Err(Error::InvalidInput(format!(
                "center {i} has dimension {} but the cloud has {}",
                c.len(),
                cloud.dim()
            )));
        }
    }
    let mut sorted: Vec<f64> = radii.to_vec();
    for &r in &sorted {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput("radii must be positive and finite".into()));
        }
    }
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted.dedup();
    if sorted.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 distinct radii, got {}",
            sorted.len()
        )));
    }

    let index = RangeIndex::build(cloud.points(), cloud.dim(), sorted[0]);
    let n = cloud.len() as f64;
    let log_r: Vec<f64> = sorted.iter().map(|r| r.ln()).collect();

    let per_center: Vec<Option<f64>> = map_indexed(centers.len(), |i| {
        let counts = index.ball_counts(&centers[i], &sorted);
        if *counts.last().unwrap() == 0 {
            return None;
        }
        let log_mass: Vec<f64> = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
        let (slope, _, _) = fit_line(&log_r, &log_mass);
        Some(slope)
    });

    let mut slopes = Vec::new();
    let mut skipped = 0usize;
    for s in per_center {
        match s {
            Some(v) => slopes.push(v),
            None => skipped += 1,
        }
    }
    if slopes.is_empty() {
        return Err(Error::DegenerateSubspace(
            "every center had an empty smallest ball; no slopes to report".into(),
        ));
    }

    let mut hist: HashMap<i64, usize> = HashMap::new();
    for &s in &slopes {
        let bin = (s / LOCAL_HIST_BIN).floor() as i64;
        *hist.entry(bin).or_insert(0) += 1;
    }
    let mut histogram: Vec<HistogramBin> = hist
        .into_iter()
        .map(|(bin, count)| HistogramBin {
            lower: bin as f64 * LOCAL_HIST_BIN,
            count,
        })
        .collect();
    histogram.sort_by(|a, b| a.lower.partial_cmp(&b.lower).unwrap());

    Ok(LocalDimReport {
        slopes,
        skipped,
        histogram,
        bin_width: LOCAL_HIST_BIN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodic::alternating_markov;
    use crate::linalg::Matrix;
    use crate::words::antidiagonal_tuple;

    fn mat(rows: &[&[f64]]) -> Matrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    fn cantor_ifs() -> IFSInstance {
        let third = 1.0 / 3.0;
        let tuple = MatrixTuple::new(vec![mat(&[&[third]]), mat(&[&[third]])]).unwrap();
        IFSInstance::new(tuple, vec![vec![0.0], vec![2.0 / 3.0]]).unwrap()
    }

    #[test]
    fn identical_maps_collapse_to_the_fixed_point() {
        // Two copies of f(x) = x/2 + c: the attractor is the single fixed
        // point 2c whatever the path.
        let half = mat(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let tuple = MatrixTuple::new(vec![half.clone(), half]).unwrap();
        let c = vec![0.3, -0.1];
        let ifs = IFSInstance::new(tuple, vec![c.clone(), c]).unwrap();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        let cloud = chaos_game(&ifs, &mu, 50, None, 5).unwrap();
        for p in cloud.points() {
            assert!((p[0] - 0.6).abs() < 1e-12);
            assert!((p[1] + 0.2).abs() < 1e-12);
        }
        assert_eq!(cloud.addresses().unwrap().len(), 50);
        assert_eq!(cloud.addresses().unwrap()[0].len(), ADDRESS_PREFIX);
    }

    #[test]
    fn chaos_game_points_lie_in_the_middle_thirds_set() {
        let ifs = cantor_ifs();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        let cloud = chaos_game(&ifs, &mu, 4_000, None, 11).unwrap();
        assert!((ifs.bounding_radius() - 1.0).abs() < 1e-12);
        // Walk 15 ternary digits: every digit must avoid the middle third.
        // The chaos-game truncation error of 1e-12 grows by 3 per digit,
        // which still separates the thirds at depth 15.
        for p in cloud.points() {
            let mut x = p[0];
            for level in 0..15 {
                let tol = 1e-11 * 3.0f64.powi(level);
                assert!(x >= -tol && x <= 1.0 + tol, "left the unit interval");
                if x <= 1.0 / 3.0 + tol {
                    x *= 3.0;
                } else if x >= 2.0 / 3.0 - tol {
                    x = 3.0 * x - 2.0;
                } else {
                    panic!("point {} landed in a removed middle third", p[0]);
                }
            }
        }
    }

    #[test]
    fn doubling_burn_in_moves_points_at_most_the_tail_bound() {
        let ifs = cantor_ifs();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        let short = chaos_game(&ifs, &mu, 200, Some(8), 3).unwrap();
        let long = chaos_game(&ifs, &mu, 200, Some(16), 3).unwrap();
        let bound = (1.0f64 / 3.0).powi(8) * ifs.bounding_radius();
        for (a, b) in short.points().iter().zip(long.points()) {
            assert!((a[0] - b[0]).abs() <= bound + 1e-15);
        }
        // Same seed, same stream: the first eight symbols agree.
        assert_eq!(
            short.addresses().unwrap()[7],
            long.addresses().unwrap()[7]
        );
    }

    #[test]
    fn sampled_points_respect_the_containment_bound() {
        let t = antidiagonal_tuple();
        let mu = alternating_markov();
        let mut rng = stream_rng(99, 0);
        let translations: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let ifs = IFSInstance::new(t, translations).unwrap();
        let cloud = chaos_game(&ifs, &mu, 2_000, None, 4).unwrap();
        let r = ifs.bounding_radius();
        for p in cloud.points() {
            assert!(euclid_norm(p) <= r * (1.0 + 1e-9));
        }
    }

    #[test]
    fn chaos_game_validates_inputs_and_budget() {
        let ifs = cantor_ifs();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        assert!(matches!(
            chaos_game(&ifs, &mu, 0, None, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            chaos_game(&ifs, &mu, 10, Some(0), 1),
            Err(Error::InvalidInput(_))
        ));
        let three = MeasureSpec::uniform_bernoulli(3).unwrap();
        assert!(matches!(
            chaos_game(&ifs, &three, 10, None, 1),
            Err(Error::InvalidInput(_))
        ));
        let tiny = cantor_ifs();
        let tuple = tiny.tuple().clone().with_visit_budget(100);
        let capped = IFSInstance::new(tuple, tiny.translations().to_vec()).unwrap();
        assert!(matches!(
            chaos_game(&capped, &mu, 1_000, Some(10), 1),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn box_count_recovers_the_segment_dimension() {
        let n = 20_000;
        let points: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
        let cloud = PointCloud::from_points(points).unwrap();
        let scales: Vec<f64> = (3..=11).map(|e| 1.0 / f64::from(1u32 << e)).collect();
        let report = box_count_dim(&cloud, &scales).unwrap();
        assert!(
            (report.estimate - 1.0).abs() < 0.05,
            "segment estimate {}",
            report.estimate
        );
        assert!(report.r_squared > 0.999);
        assert_eq!(report.counts.len(), 9);
        assert!(report.counts[0].boxes < report.counts[8].boxes);
    }

    #[test]
    fn box_count_recovers_the_cantor_dimension_at_scale() {
        let ifs = cantor_ifs();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        let cloud = chaos_game(&ifs, &mu, 1_000_000, None, 17).unwrap();
        let report = box_count_dim(&cloud, &ifs.default_scales().unwrap()).unwrap();
        let oracle = 2.0f64.ln() / 3.0f64.ln();
        assert!(
            (report.estimate - oracle).abs() < 0.05,
            "estimate {} vs {}",
            report.estimate,
            oracle
        );
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn degenerate_and_invalid_box_inputs() {
        let cloud = PointCloud::from_points(vec![vec![0.25, 0.5]; 40]).unwrap();
        let scales: Vec<f64> = (3..=11).map(|e| 1.0 / f64::from(1u32 << e)).collect();
        let report = box_count_dim(&cloud, &scales).unwrap();
        assert_eq!(report.estimate, 0.0);
        assert!(!report.warnings.is_empty());
        assert!(report.counts.iter().all(|c| c.boxes == 1));

        let seg = PointCloud::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        // Too few scales.
        assert!(box_count_dim(&seg, &[0.5, 0.25, 0.125]).is_err());
        // Too narrow a window.
        assert!(box_count_dim(&seg, &[0.5, 0.25, 0.125, 0.0625]).is_err());
        // Non-positive scale.
        assert!(box_count_dim(&seg, &[0.5, 0.25, 0.0, 0.004]).is_err());
        // Empty cloud is rejected at construction.
        assert!(PointCloud::from_points(Vec::new()).is_err());
    }

    #[test]
    fn projection_keeps_addresses_and_shrinks_dimension() {
        let t = antidiagonal_tuple();
        let mu = alternating_markov();
        let ifs = IFSInstance::new(
            t,
            vec![vec![0.1, 0.2], vec![0.6, 0.1], vec![0.3, 0.7]],
        )
        .unwrap();
        let cloud = chaos_game(&ifs, &mu, 500, None, 8).unwrap();
        let w = Subspace::from_spanning(2, &[vec![1.0, 0.7]]).unwrap();
        let projected = cloud.project(&w).unwrap();
        assert_eq!(projected.dim(), 1);
        assert_eq!(projected.len(), cloud.len());
        assert_eq!(projected.addresses(), cloud.addresses());
        // Projection is a contraction: coordinates stay inside the ball.
        let r = ifs.bounding_radius();
        for p in projected.points() {
            assert!(p[0].abs() <= r * (1.0 + 1e-9));
        }
        let csv = projected.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x0,address");
        assert_eq!(csv.lines().count(), 501);
    }

    #[test]
    fn projection_never_gains_dimension_over_the_cap() {
        // Three-map planar system with dimension above 1; projecting to a
        // line must stay below min(1, full estimate) plus slack.
        let s = 0.45;
        let tuple = MatrixTuple::new(vec![
            mat(&[&[s, 0.0], &[0.0, s]]),
            mat(&[&[s, 0.0], &[0.0, s]]),
            mat(&[&[s, 0.0], &[0.0, s]]),
        ])
        .unwrap();
        let ifs = IFSInstance::new(
            tuple,
            vec![vec![0.0, 0.0], vec![0.55, 0.0], vec![0.0, 0.55]],
        )
        .unwrap();
        let mu = MeasureSpec::uniform_bernoulli(3).unwrap();
        let cloud = chaos_game(&ifs, &mu, 200_000, None, 23).unwrap();
        let scales = ifs.default_scales().unwrap();
        let full = box_count_dim(&cloud, &scales).unwrap();
        let w = Subspace::from_spanning(2, &[vec![1.0, 0.3]]).unwrap();
        let projected = box_count_dim(&cloud.project(&w).unwrap(), &scales).unwrap();
        assert!(projected.estimate <= full.estimate.min(1.0) + 0.1);
        assert!(full.estimate > 1.0);
    }

    #[test]
    fn projected_experiment_matches_the_similarity_oracle() {
        let third = 1.0 / 3.0;
        let tuple = MatrixTuple::new(vec![
            mat(&[&[third, 0.0], &[0.0, third]]),
            mat(&[&[third, 0.0], &[0.0, third]]),
        ])
        .unwrap();
        let w = Subspace::from_spanning(2, &[vec![1.0, 0.7]]).unwrap();
        let mu = MeasureSpec::uniform_bernoulli(2).unwrap();
        let experiment =
            projected_dim_experiment(&tuple, &w, &mu, 3, 150_000, 1.0, 31).unwrap();
        let oracle = 2.0f64.ln() / 3.0f64.ln();
        assert!(experiment.transversal);
        assert!(experiment.warnings.is_empty());
        assert!((experiment.predicted.value - oracle).abs() < 1e-3);
        for rec in &experiment.records {
            assert!(
                (rec.box_dim - oracle).abs() < 0.1,
                "trial {} estimate {}",
                rec.trial,
                rec.box_dim
            );
        }
        let csv = experiment.trials_csv();
        assert_eq!(csv.lines().count(), 4);

        // Norm sums at 1 trip the flag but not an error.
        let wide = MatrixTuple::new(vec![
            mat(&[&[0.5, 0.0], &[0.0, 0.5]]),
            mat(&[&[0.5, 0.0], &[0.0, 0.5]]),
        ])
        .unwrap();
        let flagged = projected_dim_experiment(&wide, &w, &mu, 1, 2_000, 1.0, 7).unwrap();
        assert!(!flagged.transversal);
        assert!(!flagged.warnings.is_empty());
    }

    #[test]
    fn uniform_segment_has_local_dimension_one() {
        let n = 20_000;
        let points: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
        let cloud = PointCloud::from_points(points).unwrap();
        let centers = cloud.sample_centers(40, 3);
        let radii = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let report = local_dim_estimate(&cloud, &centers, &radii).unwrap();
        assert_eq!(report.skipped, 0);
        assert_eq!(report.slopes.len(), 40);
        let near_one = report
            .slopes
            .iter()
            .filter(|s| (**s - 1.0).abs() < 0.1)
            .count();
        // Centers within the largest radius of an endpoint see truncated
        // balls and a smaller slope; everything else sits at 1.
        assert!(near_one >= 30, "only {near_one}/40 slopes near 1");
        for s in &report.slopes {
            assert!(*s > 0.3 && *s < 1.2, "slope {s}");
        }
    }

    #[test]
    fn point_mass_has_local_dimension_zero() {
        let cloud = PointCloud::from_points(vec![vec![0.3, -0.2]; 500]).unwrap();
        let centers = vec![vec![0.3, -0.2]];
        let report = local_dim_estimate(&cloud, &centers, &[0.4, 0.2, 0.1]).unwrap();
        assert_eq!(report.slopes.len(), 1);
        assert!(report.slopes[0].abs() < 1e-12);
        assert_eq!(report.histogram.len(), 1);
        assert_eq!(report.histogram[0].count, 1);
        let csv = report.histogram_csv();
        assert!(csv.starts_with("bin_lower,count\n"));
    }

    #[test]
    fn centers_with_empty_smallest_balls_are_skipped() {
        let mut points = vec![vec![0.0]; 300];
        points.extend(vec![vec![1.0]; 300]);
        let cloud = PointCloud::from_points(points).unwrap();
        let centers = vec![vec![0.5], vec![0.0]];
        let report = local_dim_estimate(&cloud, &centers, &[0.4, 0.2, 0.1]).unwrap();
        assert_eq!(report.skipped, 1);
        assert_eq!(report.slopes.len(), 1);
        assert!(report.slopes[0].abs() < 1e-12);

        // Radii validation.
        assert!(local_dim_estimate(&cloud, &centers, &[0.4, 0.2]).is_err());
        assert!(local_dim_estimate(&cloud, &centers, &[0.4, 0.2, -0.1]).is_err());
        assert!(local_dim_estimate(&cloud, &[], &[0.4, 0.2, 0.1]).is_err());
    }

    #[test]
    fn projected_alternating_cloud_has_two_local_dimension_modes() {
        // Projected onto a coordinate axis, the alternating three-map
        // system has local dimensions taking exactly two values, split by
        // the starting class of the path. A generic line couples every
        // path to the dominant contraction and sees a single mode; the
        // axis picks up the slow one on half the paths. Ball masses are
        // staircases in log r (cylinder masses are powers of 1/2), so the
        // radius window must span many halvings for the slope fit to
        // average out the steps.
        let t = antidiagonal_tuple();
        let mu = alternating_markov();
        let mut rng = stream_rng(41, 0);
        let translations: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let ifs = IFSInstance::new(t, translations).unwrap();
        let cloud = chaos_game(&ifs, &mu, 400_000, None, 29).unwrap();
        let projected = cloud.project(&Subspace::axis(2, 0)).unwrap();
        let centers = projected.sample_centers(200, 13);
        let r = ifs.bounding_radius();
        let radii: Vec<f64> = (5..=21).map(|e| r / f64::from(1u32 << e)).collect();
        let report = local_dim_estimate(&projected, &centers, &radii).unwrap();
        assert!(report.slopes.len() >= 150);

        let upper = 2.0f64.ln() / (2.0 * (5.0f64 / 2.0).ln());
        let lower = 2.0f64.ln() / (2.0 * 5.0f64.ln());
        let split = (upper + lower) / 2.0;
        let low: Vec<f64> = report.slopes.iter().copied().filter(|s| *s < split).collect();
        let high: Vec<f64> = report.slopes.iter().copied().filter(|s| *s >= split).collect();
        assert!(low.len() >= report.slopes.len() / 5, "low mode too thin");
        assert!(high.len() >= report.slopes.len() / 5, "high mode too thin");
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            (mean(&low) - lower).abs() < 0.05,
            "low mode at {} vs {}",
            mean(&low),
            lower
        );
        assert!(
            (mean(&high) - upper).abs() < 0.05,
            "high mode at {} vs {}",
            mean(&high),
            upper
        );
        // The histogram itself shows two occupied regions around the modes.
        assert!(report
            .histogram
            .iter()
            .any(|b| (b.lower - lower).abs() < 0.05 && b.count > 0));
        assert!(report
            .histogram
            .iter()
            .any(|b| (b.lower - upper).abs() < 0.05 && b.count > 0));
    }

    #[test]
    fn instance_validation_and_radius_override() {
        let tuple = MatrixTuple::new(vec![mat(&[&[0.5]]), mat(&[&[0.5]])]).unwrap();
        // Wrong translation count.
        assert!(IFSInstance::new(tuple.clone(), vec![vec![0.0]]).is_err());
        // Wrong translation dimension.
        assert!(IFSInstance::new(tuple.clone(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]).is_err());
        // Non-finite entry.
        assert!(IFSInstance::new(tuple.clone(), vec![vec![f64::NAN], vec![0.0]]).is_err());

        let ifs = IFSInstance::new(tuple, vec![vec![0.0], vec![0.5]]).unwrap();
        assert!((ifs.bounding_radius() - 1.0).abs() < 1e-12);
        assert!(ifs.clone().with_radius(0.5).is_err());
        let padded = ifs.with_radius(2.0).unwrap();
        assert_eq!(padded.bounding_radius(), 2.0);
        let scales = padded.default_scales().unwrap();
        assert_eq!(scales.len(), 9);
        assert!((scales[0] - 0.25).abs() < 1e-15);
        assert!((scales[8] - 2.0 / 2048.0).abs() < 1e-18);
    }
}
