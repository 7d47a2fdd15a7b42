//! Scenario files: TOML descriptions of a problem instance plus solver
//! settings, validated into a ready-to-run `Problem`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ForcingSpec, FunctionSpec};
use crate::grid::GridFunction;
use crate::homotopy::SolveSettings;
use crate::phi::{PhiHomeomorphism, PhiKind};
use crate::problem::Problem;
use crate::timescale::{Cell, Mesh, TimeScale};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    Relativistic { c: f64 },
    CubicBounded { a: f64 },
    ArctanScaled { a: f64 },
}

impl PhiSpec {
    pub fn build(&self) -> Result<PhiHomeomorphism, ScenarioError> {
        let kind = match *self {
            PhiSpec::Relativistic { c } => PhiKind::Relativistic { c },
            PhiSpec::CubicBounded { a } => PhiKind::CubicBounded { a },
            PhiSpec::ArctanScaled { a } => PhiKind::ArctanScaled { a },
        };
        let a = match kind {
            PhiKind::Relativistic { c } => c,
            PhiKind::CubicBounded { a } | PhiKind::ArctanScaled { a } => a,
        };
        if !(a.is_finite() && a > 0.0) {
            return Err(ScenarioError::Invalid(format!(
                "phi singularity bound must be positive, got {a}"
            )));
        }
        Ok(PhiHomeomorphism::new(kind))
    }

    pub fn bound(&self) -> f64 {
        match *self {
            PhiSpec::Relativistic { c } => c,
            PhiSpec::CubicBounded { a } | PhiSpec::ArctanScaled { a } => a,
        }
    }
}

/// One cell of the time scale: `{ interval = [lo, hi] }` or `{ point = t }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellSpec {
    Interval { interval: [f64; 2] },
    Point { point: f64 },
}

/// Either the literal string "real-line" or a list of cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellsSpec {
    Named(String),
    List(Vec<CellSpec>),
}

fn default_tol_fp() -> f64 {
    1e-9
}
fn default_tol_eq() -> f64 {
    1e-6
}
fn default_lambda_steps() -> u32 {
    32
}
fn default_samples() -> usize {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Absolute mesh resolution bound, or…
    #[serde(default)]
    pub mesh_dt: Option<f64>,
    /// …a divisor of the period (mesh_dt = T / divisor). `mesh_dt` wins.
    #[serde(default)]
    pub mesh_dt_divisor: Option<f64>,
    #[serde(default = "default_tol_fp")]
    pub tol_fp: f64,
    #[serde(default = "default_tol_eq")]
    pub tol_eq: f64,
    #[serde(default = "default_lambda_steps")]
    pub lambda_steps: u32,
    /// Sample count per strip for the hypothesis checks.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            mesh_dt: None,
            mesh_dt_divisor: None,
            tol_fp: default_tol_fp(),
            tol_eq: default_tol_eq(),
            lambda_steps: default_lambda_steps(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub period: f64,
    pub cells: CellsSpec,
    pub phi: PhiSpec,
    pub h: FunctionSpec,
    pub g: FunctionSpec,
    pub p: ForcingSpec,
    #[serde(default)]
    pub delay: f64,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSpec,
}

/// Everything needed to run: the problem, mesh, and solver settings.
pub struct Built {
    pub problem: Problem,
    pub mesh: Arc<Mesh>,
    pub settings: SolveSettings,
    pub samples: usize,
    /// Mean subtracted from the supplied forcing.
    pub forcing_offset: f64,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario: Scenario = toml::from_str(&text).map_err(|source| ScenarioError::Parse {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(ScenarioError::Invalid(format!("period must be positive, got {}", self.period)));
        }
        if let CellsSpec::List(cells) = &self.cells {
            if cells.is_empty() {
                return Err(ScenarioError::Invalid("cells list must be nonempty".into()));
            }
        }
        if self.alphas.len() < 2 {
            return Err(ScenarioError::Invalid("alphas needs at least two entries".into()));
        }
        if self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScenarioError::Invalid("alphas must be strictly increasing".into()));
        }
        self.h.validate().map_err(ScenarioError::Invalid)?;
        self.g.validate().map_err(ScenarioError::Invalid)?;
        self.p.validate().map_err(ScenarioError::Invalid)?;
        if let Some(dt) = self.solver.mesh_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ScenarioError::Invalid(format!("mesh_dt must be positive, got {dt}")));
            }
        }
        if let Some(div) = self.solver.mesh_dt_divisor {
            if !(div.is_finite() && div >= 1.0) {
                return Err(ScenarioError::Invalid(format!(
                    "mesh_dt_divisor must be at least 1, got {div}"
                )));
            }
        }
        Ok(())
    }

    pub fn timescale(&self) -> Result<TimeScale, ScenarioError> {
        match &self.cells {
            CellsSpec::Named(name) if name == "real-line" => {
                TimeScale::real_line(self.period).map_err(|e| ScenarioError::Invalid(e.to_string()))
            }
            CellsSpec::Named(name) => Err(ScenarioError::Invalid(format!(
                "unknown time scale name {name:?}; use \"real-line\" or a cell list"
            ))),
            CellsSpec::List(list) => {
                let cells = list
                    .iter()
                    .map(|c| match *c {
                        CellSpec::Interval { interval: [lo, hi] } => Cell::Interval { lo, hi },
                        CellSpec::Point { point } => Cell::Point(point),
                    })
                    .collect();
                TimeScale::new(self.period, cells)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))
            }
        }
    }

    pub fn mesh_dt(&self) -> f64 {
        if let Some(dt) = self.solver.mesh_dt {
            dt
        } else if let Some(div) = self.solver.mesh_dt_divisor {
            self.period / div
        } else {
            self.period / 256.0
        }
    }

    /// Scales the whole time axis by `s`: period, cells, delay, and any
    /// absolute mesh resolution (divisor-based resolutions are invariant).
    pub fn scale_time(&self, s: f64) -> Scenario {
        let mut out = self.clone();
        out.period *= s;
        out.delay *= s;
        if let Some(dt) = out.solver.mesh_dt {
            out.solver.mesh_dt = Some(dt * s);
        }
        if let CellsSpec::List(cells) = &mut out.cells {
            for c in cells.iter_mut() {
                match c {
                    CellSpec::Interval { interval } => {
                        interval[0] *= s;
                        interval[1] *= s;
                    }
                    CellSpec::Point { point } => *point *= s,
                }
            }
        }
        if let ForcingSpec::Table { points } = &mut out.p {
            for p in points.iter_mut() {
                p.0 *= s;
            }
        }
        out
    }

    pub fn build(&self) -> Result<Built, ScenarioError> {
        let ts = self.timescale()?;
        let mesh = Mesh::build(&ts, self.mesh_dt())
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let phi = self.phi.build()?;
        let p: GridFunction = self.p.build(&mesh);
        let problem =
            Problem::new(Arc::clone(&mesh), phi, self.h.build(), self.g.build(), p, self.delay)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let forcing_offset = problem.forcing_offset();
        let settings = SolveSettings {
            tol_fp: self.solver.tol_fp,
            tol_eq: self.solver.tol_eq,
            lambda_steps: self.solver.lambda_steps,
            ..Default::default()
        };
        Ok(Built { problem, mesh, settings, samples: self.solver.samples, forcing_offset })
    }
}
