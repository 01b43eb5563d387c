//! Time-ordered snapshots of a run, with on-disk layout
//! `snapshot_NNNN.csv` plus `manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::io::write_json;
use crate::solver::{Formulation, SolverConfig, StepStats};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    epsilon: f64,
    formulation: Formulation,
    times: Vec<f64>,
    snapshots: Vec<GridFunction>,
    /// `int_0^t D ds` at each snapshot time, when the producer tracked it.
    dissipation: Option<Vec<f64>>,
    stats: Vec<StepStats>,
    config: Option<SolverConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    epsilon: f64,
    formulation: Formulation,
    grid: Grid,
    times: Vec<f64>,
    files: Vec<String>,
    #[serde(default)]
    dissipation: Option<Vec<f64>>,
    #[serde(default)]
    config: Option<SolverConfig>,
    #[serde(default)]
    stats: Vec<StepStats>,
}

impl Trajectory {
    /// Validates the ordering and grid invariants. `epsilon` may be zero for
    /// externally produced fields (limit candidates).
    pub fn new(
        grid: Grid,
        epsilon: f64,
        formulation: Formulation,
        times: Vec<f64>,
        snapshots: Vec<GridFunction>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::Config(format!(
                "trajectory needs matching nonempty times and snapshots ({} vs {})",
                times.len(),
                snapshots.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Config(format!(
                "trajectory must start at t = 0, got {}",
                times[0]
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config(
                "snapshot times must be finite and strictly increasing".into(),
            ));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        for s in &snapshots {
            grid.ensure_same(s.grid())?;
        }
        Ok(Trajectory {
            grid,
            epsilon,
            formulation,
            times,
            snapshots,
            dissipation: None,
            stats: Vec::new(),
            config: None,
        })
    }

    pub(crate) fn with_run_data(
        mut self,
        dissipation: Option<Vec<f64>>,
        stats: Vec<StepStats>,
        config: SolverConfig,
    ) -> Self {
        self.dissipation = dissipation;
        self.stats = stats;
        self.config = Some(config);
        self
    }

    /// A single field held constant over `times`.
    pub fn stationary(field: GridFunction, epsilon: f64, times: Vec<f64>) -> Result<Self> {
        let grid = *field.grid();
        let snaps = vec![field; times.len()];
        let mut t = Trajectory::new(grid, epsilon, Formulation::U, times, snaps)?;
        t.dissipation = None;
        Ok(t)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[GridFunction] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &GridFunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("nonempty by construction")
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty by construction")
    }

    pub fn dissipation(&self) -> Option<&[f64]> {
        self.dissipation.as_deref()
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    pub fn config(&self) -> Option<&SolverConfig> {
        self.config.as_ref()
    }

    /// `q = u_x` at each snapshot.
    pub fn slopes(&self) -> Vec<GridFunction> {
        self.snapshots
            .iter()
            .map(GridFunction::derivative)
            .collect()
    }

    fn snapshot_name(i: usize) -> String {
        format!("snapshot_{i:04}.csv")
    }

    /// Writes snapshots and manifest into `dir` (created if needed) and
    /// returns every path written, manifest last.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.len() + 1);
        let mut files = Vec::with_capacity(self.len());
        for (i, s) in self.snapshots.iter().enumerate() {
            let name = Self::snapshot_name(i);
            let path = dir.join(&name);
            s.save_csv(&path)?;
            files.push(name);
            written.push(path);
        }
        let manifest = Manifest {
            epsilon: self.epsilon,
            formulation: self.formulation,
            grid: self.grid,
            times: self.times.clone(),
            files,
            dissipation: self.dissipation.clone(),
            config: self.config.clone(),
            stats: self.stats.clone(),
        };
        let path = dir.join(MANIFEST_NAME);
        write_json(&path, &manifest)?;
        written.push(path);
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mpath = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&mpath)?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(Some(&mpath), e.to_string()))?;
        if m.files.len() != m.times.len() {
            return Err(Error::malformed(
                Some(&mpath),
                "files and times differ in length",
            ));
        }
        let grid = Grid::new(m.grid.length(), m.grid.cells())?;
        let snapshots = m
            .files
            .iter()
            .map(|f| GridFunction::load_csv(&dir.join(f), grid))
            .collect::<Result<Vec<_>>>()?;
        let mut t = Trajectory::new(grid, m.epsilon, m.formulation, m.times, snapshots)?;
        if let Some(d) = &m.dissipation {
            if d.len() != t.len() {
                return Err(Error::malformed(
                    Some(&mpath),
                    "dissipation length mismatch",
                ));
            }
        }
        t.dissipation = m.dissipation;
        t.stats = m.stats;
        t.config = m.config;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Grid {
        Grid::new(10.0, 32).unwrap()
    }

    #[test]
    fn rejects_bad_time_axes() {
        let f = GridFunction::zeros(g());
        assert!(Trajectory::new(g(), 0.1, Formulation::U, vec![], vec![]).is_err());
        assert!(Trajectory::new(g(), 0.1, Formulation::U, vec![0.5], vec![f.clone()]).is_err());
        assert!(Trajectory::stationary(f.clone(), 0.1, vec![0.0, 0.2, 0.2]).is_err());
        assert!(Trajectory::stationary(f.clone(), -1.0, vec![0.0]).is_err());
        let other = GridFunction::zeros(Grid::new(10.0, 64).unwrap());
        assert!(Trajectory::new(g(), 0.1, Formulation::U, vec![0.0, 1.0], vec![f, other]).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = GridFunction::from_fn(g(), |x| (x / 3.0).sin() / 7.0).unwrap();
        let t = Trajectory::stationary(f, 0.01, vec![0.0, 0.1, 0.30000000000000004]).unwrap();
        let written = t.save(dir.path()).unwrap();
        assert_eq!(written.len(), 4);
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn load_reports_missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Trajectory::load(dir.path()).is_err());
        std::fs::write(dir.path().join(MANIFEST_NAME), "{\"epsilon\": 1}").unwrap();
        assert!(matches!(
            Trajectory::load(dir.path()),
            Err(Error::Malformed { .. })
        ));
    }
}
