//! Viscosity ladders: one run per `eps` on a shared grid and a shared
//! snapshot schedule, consecutive space-time differences over a compact
//! window, and certification of the smallest-`eps` member.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{certify, EntropyPair, TestFunction, Tolerances};
use crate::error::{Error, Result};
use crate::estimates::check_all;
use crate::grid::GridFunction;
use crate::initialdata::InitialNorms;
use crate::io::fmt17;
use crate::solver::{Formulation, Solver, SolverConfig};
use crate::trajectory::Trajectory;

/// Space-time box `[x_lo, x_hi] x [t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Window {
    pub fn default_for(t_final: f64) -> Self {
        Window {
            x_lo: -10.0,
            x_hi: 10.0,
            t_lo: 0.1f64.min(0.5 * t_final),
            t_hi: t_final,
        }
    }
}

/// What the smallest-`eps` run is certified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationPlan {
    pub pairs: Vec<EntropyPair>,
    pub bumps: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub paper_literal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// Template for every member run; its `epsilon` is overwritten.
    pub base: SolverConfig,
    pub window: Window,
    /// Permit repeated values (used to test the zero-difference case).
    #[serde(default)]
    pub allow_duplicates: bool,
    #[serde(default)]
    pub certification: Option<CertificationPlan>,
    /// Worker cap: `Some(0)` runs members sequentially, `None` uses the
    /// global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub const DEFAULT_EPSILONS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];

    pub fn new(epsilons: Vec<f64>, base: SolverConfig) -> Self {
        let window = Window::default_for(base.t_final);
        SweepConfig {
            epsilons,
            base,
            window,
            allow_duplicates: false,
            certification: None,
            threads: None,
        }
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("sweep needs at least one epsilon".into()));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Config(
                "viscosity must be positive for every sweep member".into(),
            ));
        }
        let ordered = self.epsilons.windows(2).all(|w| {
            if self.allow_duplicates {
                w[1] <= w[0]
            } else {
                w[1] < w[0]
            }
        });
        if !ordered {
            return Err(Error::Config(format!(
                "sweep epsilons must be strictly decreasing, got {:?}",
                self.epsilons
            )));
        }
        let w = &self.window;
        let half = 0.5 * length;
        if !(w.x_lo < w.x_hi && w.x_lo >= -half && w.x_hi <= half) {
            return Err(Error::Config(format!(
                "window x-range [{}, {}] outside the domain",
                w.x_lo, w.x_hi
            )));
        }
        if !(w.t_lo < w.t_hi && w.t_lo >= 0.0 && w.t_hi <= self.base.t_final) {
            return Err(Error::Config(format!(
                "window t-range [{}, {}] outside [0, {}]",
                w.t_lo, w.t_hi, self.base.t_final
            )));
        }
        if self.base.formulation != Formulation::U {
            return Err(Error::Config("sweeps run in U_FORM".into()));
        }
        self.base.validate().or_else(|e| match e {
            // the base epsilon is a placeholder
            Error::Config(m) if m.starts_with("viscosity") => Ok(()),
            other => Err(other),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epsilon: f64,
    pub completed: bool,
    pub steps: usize,
    pub t_reached: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `d` and `d'` between consecutive ladder members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Difference {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub d: f64,
    pub d_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCertification {
    pub epsilon: f64,
    pub bounds: Vec<(String, bool)>,
    pub entropy_passed: bool,
    pub worst_entropy_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    pub window: Window,
    pub runs: Vec<RunSummary>,
    pub differences: Vec<Difference>,
    /// Window distances of the smallest-`eps` run to the mean of the two
    /// smallest-`eps` runs, `(u, u_x)`. Reporting only.
    pub reference_distance: Option<(f64, f64)>,
    pub certification: Option<SweepCertification>,
    pub complete: bool,
    pub warnings: Vec<String>,
}

impl SweepReport {
    /// Both difference sequences strictly decrease, allowing one
    /// violation when both values sit below `1e-6 * scale`.
    pub fn is_monotone(&self, scale: f64) -> bool {
        let floor = 1e-6 * scale.max(f64::MIN_POSITIVE);
        let check = |v: Vec<f64>| {
            let bad = v
                .windows(2)
                .filter(|w| !(w[1] < w[0]))
                .map(|w| w[0] < floor && w[1] < floor)
                .collect::<Vec<_>>();
            bad.is_empty() || (bad.len() == 1 && bad[0])
        };
        check(self.differences.iter().map(|d| d.d).collect())
            && check(self.differences.iter().map(|d| d.d_prime).collect())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub epsilon: f64,
    pub d: f64,
    pub d_prime: f64,
    /// `d_{k+1} / d_k`; absent on the first row.
    pub ratio: Option<f64>,
    pub ratio_prime: Option<f64>,
}

/// One row per consecutive difference.
pub fn cauchy_table(report: &SweepReport) -> Vec<CauchyRow> {
    let ratio = |a: f64, b: f64| if a > 0.0 { Some(b / a) } else { None };
    report
        .differences
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let prev = k.checked_sub(1).map(|j| report.differences[j]);
            CauchyRow {
                epsilon: d.eps_coarse,
                d: d.d,
                d_prime: d.d_prime,
                ratio: prev.and_then(|p| ratio(p.d, d.d)),
                ratio_prime: prev.and_then(|p| ratio(p.d_prime, d.d_prime)),
            }
        })
        .collect()
}

pub fn write_cauchy_csv(rows: &[CauchyRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epsilon", "d", "d_prime", "ratio", "ratio_prime"])?;
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    for r in rows {
        w.write_record([
            fmt17(r.epsilon),
            fmt17(r.d),
            fmt17(r.d_prime),
            opt(r.ratio),
            opt(r.ratio_prime),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(||f - g||, ||D f - D g||)` in `L^2` over the window, trapezoid in time
/// over the shared snapshots inside `[t_lo, t_hi]`.
pub fn window_distance(a: &Trajectory, b: &Trajectory, window: &Window) -> Result<(f64, f64)> {
    a.grid().ensure_same(b.grid())?;
    if a.times() != b.times() {
        return Err(Error::Config(
            "trajectories do not share snapshot times".into(),
        ));
    }
    let grid = a.grid();
    let h = grid.spacing();
    let cols: Vec<usize> = (0..grid.cells())
        .filter(|&i| (window.x_lo..=window.x_hi).contains(&grid.node(i)))
        .collect();
    let idx: Vec<usize> = (0..a.len())
        .filter(|&k| (window.t_lo..=window.t_hi).contains(&a.times()[k]))
        .collect();
    if idx.is_empty() {
        return Err(Error::Config("no snapshots inside the sweep window".into()));
    }
    let (mut s, mut sp) = (0.0, 0.0);
    for (j, &k) in idx.iter().enumerate() {
        let t = a.times();
        let left = if j > 0 { t[k] - t[idx[j - 1]] } else { 0.0 };
        let right = if j + 1 < idx.len() {
            t[idx[j + 1]] - t[k]
        } else {
            0.0
        };
        let w = 0.5 * (left + right);
        let diff = a.snapshots()[k].sub(&b.snapshots()[k]);
        let dd = diff.derivative();
        let (dv, ddv) = (diff.values(), dd.values());
        let (mut e, mut ep) = (0.0, 0.0);
        for &i in &cols {
            e += dv[i] * dv[i];
            ep += ddv[i] * ddv[i];
        }
        s += w * h * e;
        sp += w * h * ep;
    }
    // a single snapshot in the window degenerates to a spatial norm
    if idx.len() == 1 {
        let diff = a.snapshots()[idx[0]].sub(&b.snapshots()[idx[0]]);
        let dd = diff.derivative();
        s = cols.iter().map(|&i| h * diff.values()[i].powi(2)).sum();
        sp = cols.iter().map(|&i| h * dd.values()[i].powi(2)).sum();
    }
    Ok((s.sqrt(), sp.sqrt()))
}

/// A sweep's report plus the trajectories of the members that finished.
#[derive(Debug)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub trajectories: Vec<Trajectory>,
}

/// Runs the ladder from mollified data `u0`; `norms` are those of the
/// unmollified data. Member runs are independent and execute on a rayon
/// pool. If any member blows up, the report is returned with
/// `complete = false` and no differences.
pub fn run_sweep(
    u0: &GridFunction,
    norms: &InitialNorms,
    cfg: &SweepConfig,
) -> Result<SweepOutcome> {
    let grid = *u0.grid();
    cfg.validate(grid.length())?;
    let mut warnings = Vec::new();
    let eps_min = cfg.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    if grid.spacing() > 0.25 * eps_min {
        warnings.push(format!(
            "grid spacing {} exceeds eps_min / 4 = {}; the smallest-eps run is under-resolved in the viscous layer",
            grid.spacing(),
            0.25 * eps_min
        ));
    }

    let solver = Solver::new(grid);
    let member = |eps: f64| {
        let mut c = cfg.base.clone();
        c.epsilon = eps;
        solver.run(u0, &c)
    };
    let results: Vec<Result<Trajectory>> = match cfg.threads {
        Some(0) => cfg.epsilons.iter().map(|&e| member(e)).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| cfg.epsilons.par_iter().map(|&e| member(e)).collect()),
        None => cfg.epsilons.par_iter().map(|&e| member(e)).collect(),
    };

    let mut runs = Vec::new();
    let mut trajectories = Vec::new();
    let mut fatal = None;
    for (eps, r) in cfg.epsilons.iter().zip(results) {
        match r {
            Ok(t) => {
                runs.push(RunSummary {
                    epsilon: *eps,
                    completed: true,
                    steps: t.stats().len(),
                    t_reached: t.t_final(),
                    error: None,
                });
                trajectories.push(t);
            }
            Err(e) => {
                let t_reached = match &e {
                    Error::BlowUp { t, .. } => *t,
                    _ => 0.0,
                };
                runs.push(RunSummary {
                    epsilon: *eps,
                    completed: false,
                    steps: 0,
                    t_reached,
                    error: Some(e.to_string()),
                });
                if !matches!(e, Error::BlowUp { .. }) && fatal.is_none() {
                    fatal = Some(e);
                }
            }
        }
    }
    if let Some(e) = fatal {
        return Err(e);
    }
    if trajectories.len() < cfg.epsilons.len() {
        let report = SweepReport {
            epsilons: cfg.epsilons.clone(),
            window: cfg.window,
            runs,
            differences: Vec::new(),
            reference_distance: None,
            certification: None,
            complete: false,
            warnings,
        };
        return Ok(SweepOutcome {
            report,
            trajectories,
        });
    }

    let differences = trajectories
        .windows(2)
        .map(|p| {
            let (d, d_prime) = window_distance(&p[0], &p[1], &cfg.window)?;
            Ok(Difference {
                eps_coarse: p[0].epsilon(),
                eps_fine: p[1].epsilon(),
                d,
                d_prime,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let reference_distance = match trajectories.as_slice() {
        [.., a, b] => {
            let mean: Vec<GridFunction> = a
                .snapshots()
                .iter()
                .zip(b.snapshots())
                .map(|(x, y)| x.add(y).scale(0.5))
                .collect();
            let reference = Trajectory::new(grid, 0.0, Formulation::U, b.times().to_vec(), mean)?;
            Some(window_distance(b, &reference, &cfg.window)?)
        }
        _ => None,
    };

    let certification = match &cfg.certification {
        Some(plan) => {
            let smallest = trajectories.last().expect("nonempty ladder");
            let bounds = check_all(smallest, norms)?;
            let phis = TestFunction::seeded_family(plan.seed, plan.bumps, smallest.t_final());
            let cert = certify(
                smallest,
                &plan.pairs,
                &phis,
                plan.tolerances,
                plan.paper_literal,
            )?;
            let bounds: Vec<(String, bool)> = bounds
                .into_iter()
                .map(|r| (r.bound_name, r.passed))
                .collect();
            let passed = cert.passed && bounds.iter().all(|(_, p)| *p);
            Some(SweepCertification {
                epsilon: smallest.epsilon(),
                bounds,
                entropy_passed: cert.passed,
                worst_entropy_ratio: cert.worst_entropy_ratio(),
                passed,
            })
        }
        None => None,
    };

    let report = SweepReport {
        epsilons: cfg.epsilons.clone(),
        window: cfg.window,
        runs,
        differences,
        reference_distance,
        certification,
        complete: true,
        warnings,
    };
    Ok(SweepOutcome {
        report,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::pair_quadratic;
    use crate::grid::Grid;

    fn base(t: f64) -> SolverConfig {
        SolverConfig::new(1.0, t)
    }

    #[test]
    fn validation() {
        let mut cfg = SweepConfig::new(vec![0.02, 0.04], base(0.2));
        assert!(cfg.validate(40.0).is_err());
        cfg.epsilons = vec![0.02, 0.02];
        assert!(cfg.validate(40.0).is_err());
        cfg.allow_duplicates = true;
        assert!(cfg.validate(40.0).is_ok());
        cfg.epsilons = vec![0.02, 0.0];
        assert!(cfg.validate(40.0).is_err());
        cfg.epsilons = vec![0.02];
        cfg.window.x_hi = 30.0;
        assert!(cfg.validate(40.0).is_err());
    }

    #[test]
    fn duplicate_ladder_has_zero_difference() {
        let g = Grid::new(40.0, 256).unwrap();
        let u0 = GridFunction::from_fn(g, |x| 0.3 * (-x * x / 2.0).exp()).unwrap();
        let mut cfg = SweepConfig::new(vec![0.05, 0.05], base(0.2));
        cfg.allow_duplicates = true;
        cfg.threads = Some(2);
        let out = run_sweep(&u0, &InitialNorms::of(&u0), &cfg).unwrap();
        let d = out.report.differences[0];
        assert_eq!((d.d, d.d_prime), (0.0, 0.0));
        let table = cauchy_table(&out.report);
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].d, 0.0);
        assert!(table[0].ratio.is_none());
    }

    #[test]
    fn single_member_gives_empty_table() {
        let g = Grid::new(40.0, 128).unwrap();
        let u0 = GridFunction::zeros(g);
        let cfg = SweepConfig::new(vec![0.1], base(0.2));
        let out = run_sweep(&u0, &InitialNorms::of(&u0), &cfg).unwrap();
        assert!(cauchy_table(&out.report).is_empty());
        assert!(out.report.complete);
    }

    #[test]
    fn zero_data_has_zero_differences() {
        let g = Grid::new(40.0, 128).unwrap();
        let u0 = GridFunction::zeros(g);
        let mut cfg = SweepConfig::new(vec![0.2, 0.1, 0.05], base(0.2));
        cfg.threads = Some(0);
        cfg.certification = Some(CertificationPlan {
            pairs: vec![pair_quadratic()],
            bumps: 2,
            seed: 42,
            tolerances: Tolerances::default(),
            paper_literal: false,
        });
        let out = run_sweep(&u0, &InitialNorms::of(&u0), &cfg).unwrap();
        assert!(out
            .report
            .differences
            .iter()
            .all(|d| d.d == 0.0 && d.d_prime == 0.0));
        assert!(out.report.certification.as_ref().unwrap().passed);
        assert!(out.report.is_monotone(1.0));
    }

    #[test]
    fn blow_up_yields_partial_report() {
        let g = Grid::new(40.0, 128).unwrap();
        let u0 = GridFunction::from_fn(g, |x| (-x * x).exp()).unwrap();
        let mut b = base(0.2);
        b.blowup_ceiling = 1e-3;
        let cfg = SweepConfig::new(vec![0.1, 0.05], b);
        let out = run_sweep(&u0, &InitialNorms::of(&u0), &cfg).unwrap();
        assert!(!out.report.complete);
        assert!(out
            .report
            .runs
            .iter()
            .all(|r| !r.completed && r.error.is_some()));
    }

    #[test]
    fn cauchy_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let report = SweepReport {
            epsilons: vec![0.04, 0.02, 0.01],
            window: Window::default_for(1.0),
            runs: vec![],
            differences: vec![
                Difference {
                    eps_coarse: 0.04,
                    eps_fine: 0.02,
                    d: 0.2,
                    d_prime: 0.4,
                },
                Difference {
                    eps_coarse: 0.02,
                    eps_fine: 0.01,
                    d: 0.1,
                    d_prime: 0.3,
                },
            ],
            reference_distance: None,
            certification: None,
            complete: true,
            warnings: vec![],
        };
        let rows = cauchy_table(&report);
        assert_eq!(rows[1].ratio, Some(0.5));
        assert!(report.is_monotone(1.0));
        let p = dir.path().join("c.csv");
        write_cauchy_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("epsilon,d,d_prime,ratio,ratio_prime\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
