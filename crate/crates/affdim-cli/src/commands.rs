//! Subcommand implementations. Each one builds library inputs from the
//! validated config, runs the computation, and assembles a ResultDoc with
//! the JSON result plus any CSV side tables.

use std::fmt;

use serde_json::{json, Value};

use affdim::attractor::{
    chaos_game, local_dim_estimate, projected_dim_experiment, IFSInstance, LocalDimReport,
    PointCloud,
};
use affdim::criteria::{
    algebra_irreducible, antidiagonal_nonexact_criterion, d3_necessary_conditions,
    line_projection_dim, planar_measure_drop_criterion, planar_set_drop_criterion,
    CriterionReport, Verdict,
};
use affdim::ergodic::{
    check_supermultiplicative, entropy, lyapunov_dim, lyapunov_exact, lyapunov_mc, s_extremes,
    Cluster, LyapunovSpectrum, MeasureSpec, SProfile, SpectrumMode,
};
use affdim::linalg::{binomial, Matrix, Subspace};
use affdim::pressure::{
    affinity_dim, pressure_estimate, proj_affinity_dim, DimensionEstimate, EstimatorConfig,
};
use affdim::words::MatrixTuple;
use affdim::Error as LibError;

use crate::config::{ConfigError, JobConfig};
use crate::output::{num, num_vec, ResultDoc};

/// Points on the default pressure-curve grid.
const CURVE_POINTS: usize = 41;
/// Word-pair length cap for the supermultiplicativity scan.
const SUPERMULT_LEN: usize = 4;

pub enum CliError {
    /// Bad config or arguments; exit 1 and name the field.
    Config(ConfigError),
    /// Work refused because it exceeds a budget; exit 2.
    Resource(String),
    /// Computation failed for a non-budget reason; exit 1.
    Run(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Resource(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Resource(msg) => write!(f, "resource limit: {msg}"),
            CliError::Run(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn lib_err(e: LibError) -> CliError {
    match e {
        LibError::ResourceLimit(msg) => CliError::Resource(msg),
        other => CliError::Run(other.to_string()),
    }
}

/// Everything a subcommand needs besides its own name.
pub struct Ctx {
    pub config: Option<JobConfig>,
    /// Parsed config document (plus effective flag overrides) echoed into
    /// the result.
    pub echo: Value,
    pub seed: u64,
    /// Word-visit cap override from AFFDIM_BUDGET.
    pub budget: Option<u64>,
}

impl Ctx {
    fn require_config(&self) -> Result<&JobConfig, CliError> {
        self.config.as_ref().ok_or_else(|| {
            CliError::Config(ConfigError::new(
                "--config",
                "this subcommand needs a config file",
            ))
        })
    }

    fn tuple(&self, cfg: &JobConfig) -> Result<MatrixTuple, CliError> {
        let tuple = cfg.tuple()?;
        Ok(self.with_budget(tuple))
    }

    fn with_budget(&self, tuple: MatrixTuple) -> MatrixTuple {
        match self.budget {
            Some(b) => tuple.with_visit_budget(b),
            None => tuple,
        }
    }
}

// ---- JSON converters for library types ----

fn estimator_json(cfg: &EstimatorConfig) -> Value {
    json!({
        "schedule": cfg.schedule,
        "depth": cfg.depth,
        "s_tol": num(cfg.s_tol),
        "max_iter": cfg.max_iter,
        "aitken": cfg.aitken,
    })
}

fn dim_estimate_json(e: &DimensionEstimate, cfg: &EstimatorConfig) -> Value {
    json!({
        "value": num(e.value),
        "bracket": [num(e.bracket.0), num(e.bracket.1)],
        "iterations": e.iterations,
        "pressure_at_value": num(e.pressure_at_value),
        "n_used": e.n_used,
        "converged": e.converged,
        "estimator": estimator_json(cfg),
    })
}

fn mode_label(mode: SpectrumMode) -> &'static str {
    match mode {
        SpectrumMode::MonteCarlo => "monte-carlo",
        SpectrumMode::ExactDiagonal => "exact-diagonal",
        SpectrumMode::ExactAntidiagonal => "exact-antidiagonal",
    }
}

fn spectrum_json(sp: &LyapunovSpectrum) -> Value {
    json!({
        "exponents": num_vec(&sp.exponents),
        "stderr": num_vec(&sp.stderr),
        "mode": mode_label(sp.mode),
    })
}

fn cluster_json(c: &Cluster) -> Value {
    json!({
        "center": num(c.center),
        "count": c.count,
        "spread": num(c.spread),
    })
}

fn profile_json(p: &SProfile) -> Value {
    json!({
        "s_lower": num(p.s_lower),
        "s_upper": num(p.s_upper),
        "clusters": p.clusters.iter().map(cluster_json).collect::<Vec<_>>(),
        "cluster_tol": num(p.cluster_tol),
        "samples": p.records.len(),
        "zero_mass_paths": p.records.iter().filter(|r| r.zero_mass).count(),
    })
}

fn profile_records_csv(p: &SProfile) -> String {
    let mut out = String::from("sample_index,s,oscillation,zero_mass\n");
    for r in &p.records {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{}\n",
            r.sample_index, r.s, r.oscillation, r.zero_mass
        ));
    }
    out
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn report_json(r: &CriterionReport) -> Value {
    json!({
        "criterion": r.criterion,
        "verdict": verdict_label(r.verdict),
        "tolerance": num(r.tolerance),
        "evidence": r
            .evidence
            .iter()
            .map(|(name, value)| json!({"name": name, "value": num(*value)}))
            .collect::<Vec<_>>(),
        "parts": r
            .parts
            .iter()
            .map(|(name, v)| json!({"name": name, "verdict": verdict_label(*v)}))
            .collect::<Vec<_>>(),
        "notes": r.notes,
    })
}

fn local_report_json(r: &LocalDimReport) -> Value {
    let n = r.slopes.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        r.slopes.iter().sum::<f64>() / n as f64
    };
    let min = r.slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = r.slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "slopes": num_vec(&r.slopes),
        "count": n,
        "mean": num(mean),
        "min": num(min),
        "max": num(max),
        "skipped_centers": r.skipped,
        "bin_width": num(r.bin_width),
    })
}

// ---- subcommands ----

pub fn cmd_affinity_dim(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let est_cfg = cfg.estimator_config()?;
    let est = affinity_dim(&tuple, &est_cfg).map_err(lib_err)?;
    let mut doc = ResultDoc::new("affinity-dim", ctx.seed, ctx.echo.clone());
    if !est.converged {
        doc.warnings
            .push("bisection hit the iteration cap before reaching s_tol".into());
    }
    doc.result = json!({
        "affinity_dim": dim_estimate_json(&est, &est_cfg),
        "ambient_dim": tuple.dim(),
        "maps": tuple.m(),
    });
    Ok(doc)
}

pub fn cmd_proj_affinity_dim(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let w = cfg.subspace(tuple.dim())?;
    let est_cfg = cfg.estimator_config()?;
    let est = proj_affinity_dim(&tuple, &w, &est_cfg).map_err(lib_err)?;
    let mut doc = ResultDoc::new("proj-affinity-dim", ctx.seed, ctx.echo.clone());
    if !est.converged {
        doc.warnings
            .push("bisection hit the iteration cap before reaching s_tol".into());
    }
    // For a line in the plane the scalar-ratio reduction gives an
    // independent second estimate; report it when it applies.
    let cross_check = match line_check(&tuple, &w, &est_cfg) {
        Some(line) => dim_estimate_json(&line, &est_cfg),
        None => Value::Null,
    };
    doc.result = json!({
        "proj_affinity_dim": dim_estimate_json(&est, &est_cfg),
        "line_cross_check": cross_check,
        "ambient_dim": tuple.dim(),
        "subspace_dim": w.dim(),
        "maps": tuple.m(),
    });
    Ok(doc)
}

pub fn cmd_pressure_curve(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let est_cfg = cfg.estimator_config()?;
    let w = match &cfg.subspace {
        Some(_) => Some(cfg.subspace(tuple.dim())?),
        None => None,
    };
    // The potential vanishes identically above the target dimension, so the
    // grid stops there: the subspace dimension when projecting, the ambient
    // dimension otherwise.
    let cap = match &w {
        Some(w) if w.dim() < tuple.dim() => w.dim() as f64,
        _ => tuple.dim() as f64,
    };
    let mut rows = Vec::with_capacity(CURVE_POINTS);
    for i in 0..CURVE_POINTS {
        let s = cap * i as f64 / (CURVE_POINTS - 1) as f64;
        let est = pressure_estimate(&tuple, w.as_ref(), s, &est_cfg).map_err(lib_err)?;
        rows.push((s, est.value, est.upper_bound, est.method.label()));
    }
    // First sign change of the point estimate brackets the critical s.
    let root_bracket = rows
        .windows(2)
        .find(|pair| pair[0].1 > 0.0 && pair[1].1 <= 0.0)
        .map(|pair| json!([num(pair[0].0), num(pair[1].0)]))
        .unwrap_or(Value::Null);

    let mut csv = String::from("s,value,upper_bound,method\n");
    for (s, value, upper, method) in &rows {
        csv.push_str(&format!("{s:.17e},{value:.17e},{upper:.17e},{method}\n"));
    }

    let mut doc = ResultDoc::new("pressure-curve", ctx.seed, ctx.echo.clone());
    doc.result = json!({
        "s_max": num(cap),
        "points": rows.len(),
        "projected": w.is_some(),
        "root_bracket": root_bracket,
        "estimator": estimator_json(&est_cfg),
        "curve": rows
            .iter()
            .map(|(s, value, upper, method)| json!({
                "s": num(*s),
                "value": num(*value),
                "upper_bound": num(*upper),
                "method": method,
            }))
            .collect::<Vec<_>>(),
    });
    doc.tables.push(("curve".into(), csv));
    Ok(doc)
}

pub fn cmd_lyapunov(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let mu = cfg.measure()?;
    let mut doc = ResultDoc::new("lyapunov", ctx.seed, ctx.echo.clone());
    let spectrum = match lyapunov_exact(&tuple, &mu) {
        Ok(sp) => sp,
        Err(LibError::Unsupported(msg)) => {
            doc.warnings.push(format!(
                "exact spectrum unavailable ({msg}); falling back to Monte Carlo"
            ));
            lyapunov_mc(&tuple, &mu, cfg.paths.length, cfg.paths.samples, ctx.seed)
                .map_err(lib_err)?
        }
        Err(e) => return Err(lib_err(e)),
    };
    let dimension = match lyapunov_dim(&mu, &spectrum) {
        Ok(v) => num(v),
        Err(e) => {
            doc.warnings
                .push(format!("Lyapunov dimension undefined: {e}"));
            Value::Null
        }
    };
    doc.result = json!({
        "spectrum": spectrum_json(&spectrum),
        "entropy": num(entropy(&mu)),
        "lyapunov_dim": dimension,
        "path_length": cfg.paths.length,
        "trials": cfg.paths.samples,
    });
    Ok(doc)
}

pub fn cmd_s_spectrum(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let mu = cfg.measure()?;
    let w = cfg.subspace(tuple.dim())?;
    let profile = s_extremes(
        &mu,
        &tuple,
        &w,
        cfg.paths.samples,
        cfg.paths.length,
        ctx.seed,
    )
    .map_err(lib_err)?;
    let mut doc = ResultDoc::new("s-spectrum", ctx.seed, ctx.echo.clone());
    if profile.records.iter().any(|r| r.zero_mass) {
        doc.warnings
            .push("some sampled paths left the measure's support; their exponents saturate".into());
    }
    doc.result = json!({
        "profile": profile_json(&profile),
        "path_length": cfg.paths.length,
    });
    doc.tables.push(("records".into(), profile_records_csv(&profile)));
    Ok(doc)
}

pub fn cmd_criteria(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let d = tuple.dim();
    let mu = match &cfg.measure {
        Some(_) => Some(cfg.measure()?),
        None => None,
    };
    let w = match &cfg.subspace {
        Some(_) => Some(cfg.subspace(d)?),
        None => None,
    };

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut skip = |name: &str, reason: String| {
        skipped.push(json!({"criterion": name, "reason": reason}));
    };

    let mut irreducibility = Vec::new();
    for q in 1..d {
        match algebra_irreducible(&tuple, q) {
            Ok(flag) => irreducibility.push(json!({"q": q, "irreducible": flag})),
            Err(e) => skip(&format!("algebra-irreducible-q{q}"), e.to_string()),
        }
    }

    match antidiagonal_nonexact_criterion(&tuple) {
        Ok(r) => reports.push(report_json(&r)),
        Err(e) => skip("antidiagonal-nonexact", e.to_string()),
    }

    match &w {
        Some(w) => {
            match planar_set_drop_criterion(&tuple, w) {
                Ok(r) => reports.push(report_json(&r)),
                Err(e) => skip("planar-set-drop", e.to_string()),
            }
            match &mu {
                Some(mu) => match planar_measure_drop_criterion(&tuple, w, mu) {
                    Ok(r) => reports.push(report_json(&r)),
                    Err(e) => skip("planar-measure-drop", e.to_string()),
                },
                None => skip("planar-measure-drop", "needs a measure section".into()),
            }
            match d3_necessary_conditions(&tuple, w) {
                Ok(r) => reports.push(report_json(&r)),
                Err(e) => skip("three-dimensional-necessary-conditions", e.to_string()),
            }
        }
        None => {
            skip("planar-set-drop", "needs a subspace section".into());
            skip("planar-measure-drop", "needs subspace and measure sections".into());
            skip(
                "three-dimensional-necessary-conditions",
                "needs a subspace section".into(),
            );
        }
    }

    let supermult = match &mu {
        Some(mu) => match check_supermultiplicative(mu, SUPERMULT_LEN) {
            Ok(r) => json!({
                "constant": num(r.constant),
                "pairs_tested": r.pairs_tested,
                "zero_pair_count": r.zero_pair_count,
                "max_word_length": SUPERMULT_LEN,
            }),
            Err(e) => {
                skip("supermultiplicativity-scan", e.to_string());
                Value::Null
            }
        },
        None => {
            skip("supermultiplicativity-scan", "needs a measure section".into());
            Value::Null
        }
    };

    let mut doc = ResultDoc::new("criteria", ctx.seed, ctx.echo.clone());
    doc.result = json!({
        "reports": reports,
        "irreducibility": irreducibility,
        "supermultiplicativity": supermult,
        "skipped": skipped,
    });
    Ok(doc)
}

pub fn cmd_irreducible(ctx: &Ctx, q: usize) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let flag = algebra_irreducible(&tuple, q).map_err(lib_err)?;
    let mut doc = ResultDoc::new("irreducible", ctx.seed, ctx.echo.clone());
    doc.result = json!({
        "q": q,
        "irreducible": flag,
        "wedge_space_dim": binomial(tuple.dim(), q),
    });
    Ok(doc)
}

pub fn cmd_box_experiment(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let mu = cfg.measure()?;
    let w = cfg.subspace(tuple.dim())?;
    let exp = &cfg.experiment;
    let result = projected_dim_experiment(
        &tuple,
        &w,
        &mu,
        exp.trials,
        exp.points,
        exp.translation_radius,
        ctx.seed,
    )
    .map_err(lib_err)?;
    let est_cfg = EstimatorConfig::default();
    let mut doc = ResultDoc::new("box-experiment", ctx.seed, ctx.echo.clone());
    doc.warnings.extend(result.warnings.iter().cloned());
    doc.result = json!({
        "predicted": dim_estimate_json(&result.predicted, &est_cfg),
        "mean_box_dim": num(result.mean_box_dim),
        "spread": num(result.spread),
        "transversal": result.transversal,
        "trials": exp.trials,
        "points_per_trial": exp.points,
        "translation_radius": num(exp.translation_radius),
        "records": result
            .records
            .iter()
            .map(|r| json!({
                "trial": r.trial,
                "box_dim": num(r.box_dim),
                "r_squared": num(r.r_squared),
            }))
            .collect::<Vec<_>>(),
    });
    doc.tables.push(("trials".into(), result.trials_csv()));
    Ok(doc)
}

pub fn cmd_local_dim(ctx: &Ctx) -> Result<ResultDoc, CliError> {
    let cfg = ctx.require_config()?;
    let tuple = ctx.tuple(cfg)?;
    let mu = cfg.measure()?;
    let translations = cfg.checked_translations()?;
    let ifs = IFSInstance::new(tuple, translations).map_err(lib_err)?;
    let cloud = chaos_game(&ifs, &mu, cfg.experiment.points, None, ctx.seed).map_err(lib_err)?;
    let (cloud, projected) = match &cfg.subspace {
        Some(_) => {
            let w = cfg.subspace(ifs.tuple().dim())?;
            (cloud.project(&w).map_err(lib_err)?, true)
        }
        None => (cloud, false),
    };
    // Distinct stream from the chaos-game seed so centers are not the
    // first points of the cloud.
    let centers = cloud.sample_centers(cfg.local.centers, ctx.seed.wrapping_add(0x9E37_79B9));
    let radii = match &cfg.local.radii {
        Some(r) => r.clone(),
        None => default_local_radii(&cloud),
    };
    let report = local_dim_estimate(&cloud, &centers, &radii).map_err(lib_err)?;

    let mut doc = ResultDoc::new("local-dim", ctx.seed, ctx.echo.clone());
    if report.skipped > 0 {
        doc.warnings.push(format!(
            "{} of {} centers had an empty smallest ball and were skipped",
            report.skipped,
            centers.len()
        ));
    }
    doc.result = json!({
        "local_dims": local_report_json(&report),
        "projected": projected,
        "cloud_points": cloud.len(),
        "cloud_dim": cloud.dim(),
        "centers": centers.len(),
        "radii": num_vec(&radii),
    });
    doc.tables.push(("histogram".into(), report.histogram_csv()));
    if cfg.local.export_cloud {
        doc.tables.push(("cloud".into(), cloud.to_csv()));
    }
    Ok(doc)
}

/// Seventeen halving radii starting at 1/32 of the cloud's widest extent:
/// wide enough to average over the mass plateaus of strongly lacunary
/// measures, fine enough to stay inside the cloud.
fn default_local_radii(cloud: &PointCloud) -> Vec<f64> {
    let span = cloud
        .extent()
        .iter()
        .map(|(lo, hi)| hi - lo)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    (5..=21).map(|e| span / f64::from(1u32 << e)).collect()
}

/// The built-in benchmark: three antidiagonal planar maps driven by a
/// two-state alternating chain, projected to the first coordinate axis.
/// Its extreme exponents have closed forms, so the command doubles as an
/// end-to-end self check.
pub fn cmd_benchmark(ctx: &Ctx, samples: usize, length: usize) -> Result<ResultDoc, CliError> {
    let tuple = benchmark_tuple().map_err(lib_err)?;
    let tuple = ctx.with_budget(tuple);
    let mu = benchmark_measure().map_err(lib_err)?;
    let w = Subspace::axis(2, 0);
    let profile = s_extremes(&mu, &tuple, &w, samples, length, ctx.seed).map_err(lib_err)?;
    let h = entropy(&mu);
    // Closed forms: mass halves per symbol pair while the projected norm
    // contracts by 2/5 or 1/5 per pair depending on the starting state.
    let s_upper_exact = 2f64.ln() / (2.0 * 2.5f64.ln());
    let s_lower_exact = 2f64.ln() / (2.0 * 5f64.ln());

    let mut doc = ResultDoc::new("example-8-1", ctx.seed, ctx.echo.clone());
    doc.result = json!({
        "s_bar": num(profile.s_upper),
        "s_lower": num(profile.s_lower),
        "clusters": profile.clusters.iter().map(cluster_json).collect::<Vec<_>>(),
        "cluster_tol": num(profile.cluster_tol),
        "entropy": num(h),
        "samples": samples,
        "path_length": length,
        "reference": {
            "s_bar": num(s_upper_exact),
            "s_lower": num(s_lower_exact),
            "entropy": num(0.5 * 2f64.ln()),
        },
    });
    doc.tables.push(("records".into(), profile_records_csv(&profile)));
    Ok(doc)
}

/// Two maps contracting (x, y) -> (0.4 y, 0.2 x) and one -> (0.2 y, 0.4 x).
pub fn benchmark_tuple() -> Result<MatrixTuple, LibError> {
    let fast = Matrix::from_rows(&[vec![0.0, 0.4], vec![0.2, 0.0]])?;
    let slow = Matrix::from_rows(&[vec![0.0, 0.2], vec![0.4, 0.0]])?;
    MatrixTuple::new(vec![fast.clone(), fast, slow])
}

/// Stationary chain alternating between the pair {1, 2} and the symbol 3.
pub fn benchmark_measure() -> Result<MeasureSpec, LibError> {
    MeasureSpec::markov(
        vec![0.25, 0.25, 0.5],
        vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ],
    )
}

/// Config document equivalent to the built-in benchmark, echoed into the
/// result so a run is reproducible from a file.
pub fn benchmark_echo(samples: usize, length: usize) -> Value {
    json!({
        "matrices": [
            [[0.0, 0.4], [0.2, 0.0]],
            [[0.0, 0.4], [0.2, 0.0]],
            [[0.0, 0.2], [0.4, 0.0]],
        ],
        "measure": {
            "type": "markov",
            "p": [0.25, 0.25, 0.5],
            "rows": [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]],
        },
        "subspace": {"basis": [[1.0, 0.0]]},
        "paths": {"samples": samples, "length": length},
    })
}

/// Cross-check helper used by `proj-affinity-dim` when the target is a
/// line in the plane: the direct estimator and the reduction to scalar
/// ratios must agree.
fn line_check(
    tuple: &MatrixTuple,
    w: &Subspace,
    cfg: &EstimatorConfig,
) -> Option<DimensionEstimate> {
    if tuple.dim() == 2 && w.dim() == 1 {
        line_projection_dim(tuple, w, cfg).ok()
    } else {
        None
    }
}
