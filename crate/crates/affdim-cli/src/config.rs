//! Job configuration: JSON schema, parse-time validation of every
//! module-level invariant, and conversion into library types. Validation
//! errors carry the offending field path.

use std::fmt;

use serde::Deserialize;

use affdim::ergodic::MeasureSpec;
use affdim::linalg::{Matrix, Subspace};
use affdim::pressure::EstimatorConfig;
use affdim::words::MatrixTuple;

/// A config problem tied to the field that caused it.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn default_schedule() -> Vec<usize> {
    vec![4, 8]
}
fn default_s_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> u32 {
    80
}
fn default_samples() -> usize {
    40
}
fn default_length() -> usize {
    400
}
fn default_trials() -> usize {
    10
}
fn default_points() -> usize {
    200_000
}
fn default_radius() -> f64 {
    1.0
}
fn default_centers() -> usize {
    200
}

/// Full job description. Every section beyond `matrices` is optional;
/// each subcommand validates that the sections it needs are present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Row-major square matrices, one per map.
    pub matrices: Vec<Vec<Vec<f64>>>,
    /// One translation vector per map (chaos-game commands only).
    #[serde(default)]
    pub translations: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    /// Spanning rows of the target subspace; orthonormalized on load.
    #[serde(default)]
    pub subspace: Option<SubspaceConfig>,
    #[serde(default)]
    pub estimator: EstimatorParams,
    #[serde(default)]
    pub paths: PathParams,
    #[serde(default)]
    pub experiment: ExperimentParams,
    #[serde(default)]
    pub local: LocalParams,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Bernoulli { p: Vec<f64> },
    Markov { p: Vec<f64>, rows: Vec<Vec<f64>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceConfig {
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorParams {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<usize>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "default_s_tol")]
    pub s_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u32,
    #[serde(default)]
    pub aitken: bool,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            schedule: default_schedule(),
            depth: None,
            s_tol: default_s_tol(),
            max_iter: default_max_iter(),
            aitken: false,
        }
    }
}

/// Path sampling sizes for spectrum and Monte Carlo commands.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathParams {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_length")]
    pub length: usize,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            samples: default_samples(),
            length: default_length(),
        }
    }
}

/// Random-translation box-counting experiment sizes.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_radius")]
    pub translation_radius: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            trials: default_trials(),
            points: default_points(),
            translation_radius: default_radius(),
        }
    }
}

/// Local-dimension estimation sizes.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalParams {
    #[serde(default = "default_centers")]
    pub centers: usize,
    /// Ball radii; omitted means 17 halvings from R/32 down.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Also write the projected point cloud as a CSV side table.
    #[serde(default)]
    pub export_cloud: bool,
}

impl Default for LocalParams {
    fn default() -> Self {
        LocalParams {
            centers: default_centers(),
            radii: None,
            export_cloud: false,
        }
    }
}

impl JobConfig {
    /// Parses and fully validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: JobConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError::new("<document>", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.tuple()?;
        let d = self.matrices[0].len();
        if let Some(t) = &self.translations {
            self.checked_translations_inner(t, d)?;
        }
        if self.measure.is_some() {
            self.measure()?;
        }
        if self.subspace.is_some() {
            self.subspace(d)?;
        }
        self.estimator_config()?;
        if self.paths.samples == 0 || self.paths.length == 0 {
            return Err(ConfigError::new(
                "paths",
                "samples and length must both be at least 1",
            ));
        }
        if self.experiment.trials == 0 || self.experiment.points == 0 {
            return Err(ConfigError::new(
                "experiment",
                "trials and points must both be at least 1",
            ));
        }
        if !(self.experiment.translation_radius.is_finite()
            && self.experiment.translation_radius > 0.0)
        {
            return Err(ConfigError::new(
                "experiment.translation_radius",
                "must be positive and finite",
            ));
        }
        if self.local.centers == 0 {
            return Err(ConfigError::new("local.centers", "must be at least 1"));
        }
        Ok(())
    }

    /// The contraction tuple, with per-matrix invariant checks.
    pub fn tuple(&self) -> Result<MatrixTuple, ConfigError> {
        if self.matrices.len() < 2 {
            return Err(ConfigError::new(
                "matrices",
                format!("need at least 2 matrices, got {}", self.matrices.len()),
            ));
        }
        let mut mats = Vec::with_capacity(self.matrices.len());
        for (i, rows) in self.matrices.iter().enumerate() {
            let field = format!("matrices[{i}]");
            let m = Matrix::from_rows(rows).map_err(|e| ConfigError::new(&field, e))?;
            if !m.is_square() {
                return Err(ConfigError::new(
                    &field,
                    format!("must be square, got {}x{}", m.rows(), m.cols()),
                ));
            }
            if !m.is_finite() {
                return Err(ConfigError::new(&field, "entries must be finite"));
            }
            let norm = m.op_norm();
            if norm >= 1.0 {
                return Err(ConfigError::new(
                    &field,
                    format!("operator norm {norm:.6} is not a strict contraction"),
                ));
            }
            mats.push(m);
        }
        MatrixTuple::new(mats).map_err(|e| ConfigError::new("matrices", e))
    }

    /// Translations checked against the tuple shape.
    pub fn checked_translations(&self) -> Result<Vec<Vec<f64>>, ConfigError> {
        let d = self.matrices[0].len();
        match &self.translations {
            Some(t) => {
                self.checked_translations_inner(t, d)?;
                Ok(t.clone())
            }
            None => Err(ConfigError::new(
                "translations",
                "this subcommand needs translation vectors",
            )),
        }
    }

    fn checked_translations_inner(
        &self,
        translations: &[Vec<f64>],
        d: usize,
    ) -> Result<(), ConfigError> {
        if translations.len() != self.matrices.len() {
            return Err(ConfigError::new(
                "translations",
                format!(
                    "need one vector per map: got {} for {} maps",
                    translations.len(),
                    self.matrices.len()
                ),
            ));
        }
        for (i, a) in translations.iter().enumerate() {
            if a.len() != d {
                return Err(ConfigError::new(
                    format!("translations[{i}]"),
                    format!("length {} does not match dimension {d}", a.len()),
                ));
            }
            if !a.iter().all(|x| x.is_finite()) {
                return Err(ConfigError::new(
                    format!("translations[{i}]"),
                    "entries must be finite",
                ));
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<MeasureSpec, ConfigError> {
        match &self.measure {
            Some(MeasureConfig::Bernoulli { p }) => {
                MeasureSpec::bernoulli(p.clone()).map_err(|e| ConfigError::new("measure.p", e))
            }
            Some(MeasureConfig::Markov { p, rows }) => {
                MeasureSpec::markov(p.clone(), rows.clone())
                    .map_err(|e| ConfigError::new("measure", e))
            }
            None => Err(ConfigError::new(
                "measure",
                "this subcommand needs a measure section",
            )),
        }
    }

    /// The target subspace, orthonormalized from the configured rows.
    pub fn subspace(&self, d: usize) -> Result<Subspace, ConfigError> {
        let Some(sub) = &self.subspace else {
            return Err(ConfigError::new(
                "subspace",
                "this subcommand needs a subspace section",
            ));
        };
        if sub.basis.is_empty() {
            return Err(ConfigError::new("subspace.basis", "need at least one row"));
        }
        for (j, row) in sub.basis.iter().enumerate() {
            if row.len() != d {
                return Err(ConfigError::new(
                    format!("subspace.basis[{j}]"),
                    format!("length {} does not match dimension {d}", row.len()),
                ));
            }
        }
        Subspace::from_spanning(d, &sub.basis)
            .map_err(|e| ConfigError::new("subspace.basis", e))
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig, ConfigError> {
        let p = &self.estimator;
        if p.schedule.is_empty() {
            return Err(ConfigError::new("estimator.schedule", "must be non-empty"));
        }
        if p.schedule.windows(2).any(|w| w[0] >= w[1]) || p.schedule[0] == 0 {
            return Err(ConfigError::new(
                "estimator.schedule",
                "must be strictly increasing positive word lengths",
            ));
        }
        if !(p.s_tol.is_finite() && p.s_tol > 0.0) {
            return Err(ConfigError::new("estimator.s_tol", "must be positive"));
        }
        if p.max_iter == 0 {
            return Err(ConfigError::new("estimator.max_iter", "must be at least 1"));
        }
        Ok(EstimatorConfig {
            schedule: p.schedule.clone(),
            depth: p.depth,
            s_tol: p.s_tol,
            max_iter: p.max_iter,
            aitken: p.aitken,
        })
    }
}
