//! Flat JSON experiment configuration with dotted keys.
//!
//! ```json
//! {
//!   "grid.L": 40.0, "grid.N": 2048,
//!   "solver.epsilon": 0.01, "solver.t_final": 2.0,
//!   "ic.kind": "peakon", "ic.params": {"c": 0.5, "x0": 0.0},
//!   "ic.mollify_width": 1.0,
//!   "checks.enabled": ["h1", "l1", "bv", "linf", "time_bv", "p_bounds"],
//!   "entropy.seed": 42
//! }
//! ```
//!
//! Unknown keys are rejected so that typos surface as configuration errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::{pair_kruzkov_smooth, pair_quadratic, EntropyPair, Tolerances};
use crate::error::{Error, Result};
use crate::estimates::CHECK_NAMES;
use crate::grid::{Grid, GridFunction};
use crate::initialdata::{ic_from_csv, ic_gaussian, ic_peakon, mollifier_kernel};
use crate::solver::{Formulation, SnapshotSchedule, SolverConfig};
use crate::sweep::{CertificationPlan, SweepConfig, Window};

/// Mollifier width: a length, or `"coupled"` to reuse the viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MollifyWidth {
    Width(f64),
    Named(Coupling),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Coupled,
    None,
}

fn d_length() -> f64 {
    40.0
}
fn d_cells() -> usize {
    2048
}
fn d_cfl() -> f64 {
    SolverConfig::DEFAULT_CFL
}
fn d_dt_max() -> f64 {
    SolverConfig::DEFAULT_DT_MAX
}
fn d_ceiling() -> f64 {
    SolverConfig::DEFAULT_BLOWUP_CEILING
}
fn d_kind() -> String {
    "peakon".into()
}
fn d_params() -> serde_json::Value {
    serde_json::json!({"c": 0.5, "x0": 0.0})
}
fn d_mollify() -> MollifyWidth {
    MollifyWidth::Width(1.0)
}
fn d_checks() -> Vec<String> {
    CHECK_NAMES.iter().map(|s| s.to_string()).collect()
}
fn d_epsilons() -> Vec<f64> {
    SweepConfig::DEFAULT_EPSILONS.to_vec()
}
fn d_seed() -> u64 {
    42
}
fn d_bumps() -> usize {
    12
}
fn d_ks() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}
fn d_delta() -> f64 {
    1e-3
}
fn d_true() -> bool {
    true
}
fn d_entropy_tol() -> f64 {
    Tolerances::default().entropy
}
fn d_weak_tol() -> f64 {
    Tolerances::default().weak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "grid.L", default = "d_length")]
    pub length: f64,
    #[serde(rename = "grid.N", default = "d_cells")]
    pub cells: usize,

    #[serde(rename = "solver.epsilon")]
    pub epsilon: Option<f64>,
    #[serde(rename = "solver.t_final")]
    pub t_final: f64,
    #[serde(rename = "solver.cfl", default = "d_cfl")]
    pub cfl: f64,
    #[serde(rename = "solver.dt_max", default = "d_dt_max")]
    pub dt_max: f64,
    /// Defaults to `t_final / 200`.
    #[serde(rename = "solver.snapshot_dt", default)]
    pub snapshot_dt: Option<f64>,
    #[serde(rename = "solver.snapshot_stride", default)]
    pub snapshot_stride: Option<usize>,
    #[serde(rename = "solver.formulation", default = "d_formulation")]
    pub formulation: Formulation,
    #[serde(rename = "solver.blowup_ceiling", default = "d_ceiling")]
    pub blowup_ceiling: f64,

    #[serde(rename = "ic.kind", default = "d_kind")]
    pub ic_kind: String,
    #[serde(rename = "ic.params", default = "d_params")]
    pub ic_params: serde_json::Value,
    #[serde(rename = "ic.mollify_width", default = "d_mollify")]
    pub mollify_width: MollifyWidth,

    #[serde(rename = "checks.enabled", default = "d_checks")]
    pub checks: Vec<String>,

    #[serde(rename = "sweep.epsilons", default = "d_epsilons")]
    pub sweep_epsilons: Vec<f64>,
    /// `[x_lo, x_hi, t_lo, t_hi]`.
    #[serde(rename = "sweep.window", default)]
    pub sweep_window: Option<[f64; 4]>,
    #[serde(rename = "sweep.allow_duplicates", default)]
    pub sweep_allow_duplicates: bool,

    #[serde(rename = "entropy.seed", default = "d_seed")]
    pub seed: u64,
    #[serde(rename = "entropy.bumps", default = "d_bumps")]
    pub bumps: usize,
    #[serde(rename = "entropy.quadratic", default = "d_true")]
    pub quadratic: bool,
    #[serde(rename = "entropy.kruzkov_k", default = "d_ks")]
    pub kruzkov_k: Vec<f64>,
    #[serde(rename = "entropy.delta", default = "d_delta")]
    pub delta: f64,
    #[serde(rename = "entropy.paper_literal", default)]
    pub paper_literal: bool,
    #[serde(rename = "entropy.tolerance", default = "d_entropy_tol")]
    pub entropy_tolerance: f64,
    #[serde(rename = "entropy.weak_tolerance", default = "d_weak_tol")]
    pub weak_tolerance: f64,

    /// Directory used to resolve relative paths (`ic.params.path`).
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn d_formulation() -> Formulation {
    Formulation::U
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.length, self.cells)
    }

    fn param(&self, name: &str) -> Result<f64> {
        self.ic_params
            .get(name)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::Config(format!("ic.params.{name} missing or not a number")))
    }

    /// The unmollified initial field.
    pub fn raw_initial(&self) -> Result<GridFunction> {
        let grid = self.grid()?;
        match self.ic_kind.as_str() {
            "peakon" => ic_peakon(self.param("c")?, self.param("x0").unwrap_or(0.0), grid),
            "gaussian" => ic_gaussian(self.param("a")?, self.param("s")?, grid),
            "zero" => Ok(GridFunction::zeros(grid)),
            "constant" => GridFunction::constant(grid, self.param("c")?),
            "csv" => {
                let p = self
                    .ic_params
                    .get("path")
                    .and_then(serde_json::Value::as_str)
                    .ok_or_else(|| Error::Config("ic.params.path missing".into()))?;
                ic_from_csv(&self.resolve(p), grid)
            }
            other => Err(Error::Config(format!(
                "unknown ic.kind `{other}`; expected peakon, gaussian, zero, constant or csv"
            ))),
        }
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn input_path(&self) -> Option<PathBuf> {
        (self.ic_kind == "csv")
            .then(|| {
                self.ic_params
                    .get("path")
                    .and_then(|v| v.as_str())
                    .map(|p| self.resolve(p))
            })
            .flatten()
    }

    /// Mollifies `raw` with the configured width; `"coupled"` uses `epsilon`.
    pub fn mollify(&self, raw: &GridFunction, epsilon: f64) -> Result<GridFunction> {
        let width = match self.mollify_width {
            MollifyWidth::Width(w) => w,
            MollifyWidth::Named(Coupling::Coupled) => epsilon,
            MollifyWidth::Named(Coupling::None) => return Ok(raw.clone()),
        };
        mollifier_kernel(width, *raw.grid())?.mollify(raw)
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.epsilon
            .ok_or_else(|| Error::Config("solver.epsilon is required".into()))
    }

    pub fn solver_config(&self, epsilon: f64) -> Result<SolverConfig> {
        let snapshots = match (self.snapshot_stride, self.snapshot_dt) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set at most one of solver.snapshot_dt and solver.snapshot_stride".into(),
                ))
            }
            (Some(n), None) => SnapshotSchedule::EveryNSteps(n),
            (None, Some(dt)) => SnapshotSchedule::Interval(dt),
            (None, None) => SnapshotSchedule::Interval(
                self.t_final / SolverConfig::DEFAULT_SNAPSHOT_COUNT as f64,
            ),
        };
        let cfg = SolverConfig {
            epsilon,
            t_final: self.t_final,
            cfl: self.cfl,
            dt_max: self.dt_max,
            formulation: self.formulation,
            snapshots,
            blowup_ceiling: self.blowup_ceiling,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn checks(&self) -> Result<Vec<String>> {
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.as_str()) && c != "entropy" {
                return Err(Error::Config(format!(
                    "unknown check `{c}`; expected entropy or one of {CHECK_NAMES:?}"
                )));
            }
        }
        Ok(self.checks.clone())
    }

    pub fn pairs(&self) -> Result<Vec<EntropyPair>> {
        let mut pairs = Vec::new();
        if self.quadratic {
            pairs.push(pair_quadratic());
        }
        for &k in &self.kruzkov_k {
            pairs.push(pair_kruzkov_smooth(k, self.delta)?);
        }
        Ok(pairs)
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            entropy: self.entropy_tolerance,
            weak: self.weak_tolerance,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let first = *self
            .sweep_epsilons
            .first()
            .ok_or_else(|| Error::Config("sweep.epsilons is empty".into()))?;
        let mut cfg = SweepConfig::new(
            self.sweep_epsilons.clone(),
            self.solver_config(first.max(f64::MIN_POSITIVE))?,
        );
        if let Some([x_lo, x_hi, t_lo, t_hi]) = self.sweep_window {
            cfg.window = Window {
                x_lo,
                x_hi,
                t_lo,
                t_hi,
            };
        }
        cfg.allow_duplicates = self.sweep_allow_duplicates;
        cfg.certification = Some(CertificationPlan {
            pairs: self.pairs()?,
            bumps: self.bumps,
            seed: self.seed,
            tolerances: self.tolerances(),
            paper_literal: self.paper_literal,
        });
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"{
        "grid.L": 40.0, "grid.N": 256,
        "solver.epsilon": 0.01, "solver.t_final": 2.0,
        "ic.kind": "peakon", "ic.params": {"c": 0.5, "x0": 0.0},
        "ic.mollify_width": 1.0
    }"#;

    #[test]
    fn canonical_config_parses() {
        let cfg = ExperimentConfig::from_json(CANONICAL).unwrap();
        assert_eq!(cfg.grid().unwrap().cells(), 256);
        let s = cfg.solver_config(cfg.epsilon().unwrap()).unwrap();
        assert_eq!(s.snapshots, SnapshotSchedule::Interval(0.01));
        assert_eq!(cfg.checks().unwrap().len(), 6);
        assert_eq!(cfg.pairs().unwrap().len(), 4);
        let raw = cfg.raw_initial().unwrap();
        assert_eq!(raw.norm_linf(), 0.5);
        assert!(cfg.mollify(&raw, 0.01).unwrap().norm_linf() < 0.5);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(
            ExperimentConfig::from_json(r#"{"solver.t_final": 1.0, "solver.epsilom": 0.1}"#)
                .is_err()
        );
        let cfg = ExperimentConfig::from_json(r#"{"solver.t_final": 1.0, "solver.epsilon": 0.0}"#)
            .unwrap();
        let err = cfg.solver_config(0.0).unwrap_err().to_string();
        assert!(err.contains("viscosity must be positive"), "{err}");
        let cfg =
            ExperimentConfig::from_json(r#"{"solver.t_final": 1.0, "ic.kind": "square"}"#).unwrap();
        assert!(cfg.raw_initial().is_err());
        let cfg =
            ExperimentConfig::from_json(r#"{"solver.t_final": 1.0, "checks.enabled": ["l2"]}"#)
                .unwrap();
        assert!(cfg.checks().is_err());
        assert!(ExperimentConfig::load(Path::new("/nonexistent/config.json")).is_err());
    }

    #[test]
    fn coupled_width_follows_epsilon() {
        let cfg = ExperimentConfig::from_json(
            r#"{"grid.N": 256, "solver.t_final": 1.0, "ic.mollify_width": "coupled"}"#,
        )
        .unwrap();
        assert_eq!(cfg.mollify_width, MollifyWidth::Named(Coupling::Coupled));
        let raw = cfg.raw_initial().unwrap();
        // 0.01 is below 2h on this grid
        assert!(matches!(
            cfg.mollify(&raw, 0.01),
            Err(Error::UnderResolvedKernel { .. })
        ));
        assert!(cfg.mollify(&raw, 0.5).is_ok());
    }
}
