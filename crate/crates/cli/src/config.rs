//! Run configuration: a single JSON document, schema-validated before any
//! computation. The resolved form (all defaults made explicit) is echoed
//! into the run manifest so a run is reproducible from its output
//! directory alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use simop_core::evolution::EvolutionState;
use simop_core::linalg::CMatrix;
use simop_core::potential::PotentialSpec;
use simop_core::similarity::SimilarityOptions;
use simop_core::{TruncationWindow, C64};

use crate::error::CliError;

fn default_theta() -> f64 {
    0.5
}
fn default_fixed_point_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    200
}
fn default_grid_points() -> usize {
    128
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Stage-one threshold on the weighted off-diagonal norm.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Fixed-point step tolerance, relative to the transformed potential.
    #[serde(default = "default_fixed_point_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            fixed_point_tol: default_fixed_point_tol(),
            max_iter: default_max_iter(),
        }
    }
}

/// Complex scalar as a `[re, im]` pair in JSON.
pub type Pair = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    /// Fourier index, `|n| <= 2 * half_width`.
    pub n: i32,
    /// `d x d` complex block, row major, entries as `[re, im]`.
    pub matrix: Vec<Vec<Pair>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `V(s) = (1/c) I_d`.
    Constant { c: f64 },
    /// Explicit coefficient table.
    Coefficients { entries: Vec<CoefficientEntry> },
    /// Equispaced samples of `V` on `[0, omega)`; CSV, one row per sample
    /// point, `2 d^2` columns of interleaved re/im in row-major block
    /// order.
    Samples { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    /// Mode index, `|ell| <= half_width`.
    pub ell: i32,
    /// Fiber vector, `d` entries as `[re, im]`.
    pub value: Vec<Pair>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    /// Coefficient list; absent modes are zero.
    Modes { entries: Vec<ModeEntry> },
    /// Equispaced samples on `[0, omega)`; CSV, one row per point, `2 d`
    /// columns of interleaved re/im.
    Samples { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    /// Coefficients of the forcing profile.
    pub entries: Vec<ModeEntry>,
    /// Optional time modulation: `f(t) = e^{i nu t} f0`.
    #[serde(default)]
    pub harmonic: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Period of the spatial variable.
    pub omega: f64,
    /// Fiber dimension `d`.
    pub dim: usize,
    /// Half-width `N` of the Fourier window.
    pub half_width: i32,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output times for `evolve`/`validate` and the tail sweep.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Initial condition for `evolve`; also the tail-sweep state in
    /// `diagnose` when present.
    #[serde(default)]
    pub initial: Option<StateConfig>,
    #[serde(default)]
    pub forcing: Option<ForcingConfig>,
    /// Uniform physical-space grid size for trajectory sampling.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// When set, `evolve` also reports the expansion tail bound at this
    /// cutoff mode.
    #[serde(default)]
    pub tail_cutoff: Option<i32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(CliError::config(format!(
                "omega must be positive and finite, got {}",
                self.omega
            )));
        }
        if self.dim == 0 {
            return Err(CliError::config("dim must be at least 1".into()));
        }
        if self.half_width < 1 {
            return Err(CliError::config(format!(
                "half_width must be at least 1, got {}",
                self.half_width
            )));
        }
        if !(self.tolerances.theta > 0.0 && self.tolerances.theta < 1.0) {
            return Err(CliError::config(format!(
                "tolerances.theta must lie in (0, 1), got {}",
                self.tolerances.theta
            )));
        }
        if !(self.tolerances.fixed_point_tol > 0.0) {
            return Err(CliError::config(
                "tolerances.fixed_point_tol must be positive".into(),
            ));
        }
        if self.tolerances.max_iter == 0 {
            return Err(CliError::config("tolerances.max_iter must be positive".into()));
        }
        if self.grid_points == 0 {
            return Err(CliError::config("grid_points must be positive".into()));
        }
        if let PotentialConfig::Constant { c } = self.potential {
            if c == 0.0 || !c.is_finite() {
                return Err(CliError::config(format!(
                    "constant potential requires a finite nonzero c, got {c}"
                )));
            }
        }
        if let Some(n) = self.tail_cutoff {
            if n <= 0 || n >= self.half_width {
                return Err(CliError::config(format!(
                    "tail_cutoff must lie strictly between 0 and half_width, got {n}"
                )));
            }
        }
        if let Some(times) = &self.times {
            if times.iter().any(|t| !t.is_finite()) {
                return Err(CliError::config("times must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Result<TruncationWindow, CliError> {
        TruncationWindow::new(self.omega, self.dim, self.half_width).map_err(CliError::from)
    }

    pub fn similarity_options(&self) -> SimilarityOptions {
        SimilarityOptions {
            theta: self.tolerances.theta,
            fixed_point_tol: self.tolerances.fixed_point_tol,
            max_iter: self.tolerances.max_iter,
        }
    }

    /// Materializes the potential, reading sample files relative to
    /// `base_dir` when the path is not absolute.
    pub fn potential_spec(&self, base_dir: &Path) -> Result<PotentialSpec, CliError> {
        let window = self.window()?;
        match &self.potential {
            PotentialConfig::Constant { c } => {
                PotentialSpec::constant_over(window, *c).map_err(CliError::from)
            }
            PotentialConfig::Coefficients { entries } => {
                let d = self.dim;
                let mut list = Vec::with_capacity(entries.len());
                for e in entries {
                    list.push((e.n, matrix_from_pairs(&e.matrix, d, e.n)?));
                }
                PotentialSpec::from_coefficients(window, list).map_err(CliError::from)
            }
            PotentialConfig::Samples { path } => {
                let full = resolve(base_dir, path);
                let rows = read_csv_rows(&full, 2 * self.dim * self.dim)?;
                let samples: Vec<CMatrix> = rows
                    .iter()
                    .map(|row| {
                        CMatrix::from_fn(self.dim, self.dim, |r, c| {
                            let base = 2 * (r * self.dim + c);
                            C64::new(row[base], row[base + 1])
                        })
                    })
                    .collect();
                PotentialSpec::from_samples(window, &samples).map_err(CliError::from)
            }
        }
    }

    /// Materializes a state description (initial condition or tail state).
    pub fn state(&self, config: &StateConfig, base_dir: &Path) -> Result<EvolutionState, CliError> {
        let window = self.window()?;
        match config {
            StateConfig::Modes { entries } => {
                let mut state = EvolutionState::zeros(window);
                for e in entries {
                    if !window.contains(e.ell) {
                        return Err(CliError::config(format!(
                            "initial mode {} outside the window",
                            e.ell
                        )));
                    }
                    if e.value.len() != self.dim {
                        return Err(CliError::config(format!(
                            "initial mode {} has {} components, expected {}",
                            e.ell,
                            e.value.len(),
                            self.dim
                        )));
                    }
                    let off = window.offset(e.ell);
                    for (c, pair) in e.value.iter().enumerate() {
                        state.coeffs_mut()[off + c] += C64::new(pair[0], pair[1]);
                    }
                }
                Ok(state)
            }
            StateConfig::Samples { path } => {
                let full = resolve(base_dir, path);
                let rows = read_csv_rows(&full, 2 * self.dim)?;
                let m = rows.len();
                if m < window.mode_count() {
                    return Err(CliError::config(format!(
                        "state sample file {} has {m} rows, need at least {}",
                        full.display(),
                        window.mode_count()
                    )));
                }
                // Discrete Fourier coefficients of the sampled function.
                let mut state = EvolutionState::zeros(window);
                for l in window.modes() {
                    let off = window.offset(l);
                    for c in 0..self.dim {
                        let mut acc = C64::new(0.0, 0.0);
                        for (p, row) in rows.iter().enumerate() {
                            let angle =
                                -2.0 * std::f64::consts::PI * (l as f64) * (p as f64) / (m as f64);
                            let phase = C64::new(angle.cos(), angle.sin());
                            acc += C64::new(row[2 * c], row[2 * c + 1]) * phase;
                        }
                        state.coeffs_mut()[off + c] = acc / (m as f64);
                    }
                }
                Ok(state)
            }
        }
    }

    /// Forcing profile plus its harmonic modulation, if configured.
    pub fn forcing_profile(
        &self,
        base_dir: &Path,
    ) -> Result<Option<(EvolutionState, f64)>, CliError> {
        match &self.forcing {
            None => Ok(None),
            Some(f) => {
                let profile = self.state(
                    &StateConfig::Modes {
                        entries: f.entries.clone(),
                    },
                    base_dir,
                )?;
                Ok(Some((profile, f.harmonic.unwrap_or(0.0))))
            }
        }
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn matrix_from_pairs(rows: &[Vec<Pair>], d: usize, n: i32) -> Result<CMatrix, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::config(format!(
            "coefficient {n}: matrix must be {d}x{d} of [re, im] pairs"
        )));
    }
    Ok(CMatrix::from_fn(d, d, |r, c| {
        C64::new(rows[r][c][0], rows[r][c][1])
    }))
}

fn read_csv_rows(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::config(format!("{}: row {i}: {e}", path.display())))?;
        if record.len() != columns {
            return Err(CliError::config(format!(
                "{}: row {i} has {} columns, expected {columns}",
                path.display(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(columns);
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|e| {
                CliError::config(format!("{}: row {i}: bad number {field:?}: {e}", path.display()))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}
