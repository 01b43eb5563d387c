//! Method-of-lines integration of the viscous nonlocal problem
//!
//! ```text
//! u_t - 4 u u_x = d/dx P1 + d^2/dx^2 P2 + eps u_xx,
//! P1 = G * (2 q^2 + 6 u^2),   P2 = G * q^2,   q = u_x,
//! ```
//!
//! and of the equivalent equation for `w = (2 - d/dx) u`,
//!
//! ```text
//! w_t = 2 w w_x + 3 d/dx G * (w^2) + eps w_xx,
//! ```
//!
//! which is integrated independently and used as a cross-check.
//!
//! Space: central differences on the periodic grid, `G *` through the
//! Helmholtz solve, `d^2/dx^2 G * f` through `G * f - f`. Time: SSP-RK3
//! with an advective and a diffusive step restriction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::blowup_functional;
use crate::grid::{Grid, GridFunction};
use crate::helmholtz::HelmholtzSolver;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    /// Evolve `u`.
    #[serde(rename = "U_FORM")]
    U,
    /// Evolve `w = (2 - D) u`.
    #[serde(rename = "W_FORM")]
    W,
}

/// When snapshots are recorded. The final time is always recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotSchedule {
    /// Every `n` accepted steps.
    EveryNSteps(usize),
    /// At `k * dt` exactly; steps are clipped to land on these times.
    Interval(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub formulation: Formulation,
    pub snapshots: SnapshotSchedule,
    pub blowup_ceiling: f64,
}

impl SolverConfig {
    pub const DEFAULT_CFL: f64 = 0.4;
    pub const DEFAULT_DT_MAX: f64 = 0.01;
    /// Snapshots per run under the default schedule. Admissible test bumps
    /// span at least `0.2 t_final` on either side of their centre, so this
    /// gives them 40 or more samples per half-width.
    pub const DEFAULT_SNAPSHOT_COUNT: usize = 200;
    pub const DEFAULT_BLOWUP_CEILING: f64 = 1e6;

    pub fn new(epsilon: f64, t_final: f64) -> Self {
        SolverConfig {
            epsilon,
            t_final,
            cfl: Self::DEFAULT_CFL,
            dt_max: Self::DEFAULT_DT_MAX,
            formulation: Formulation::U,
            snapshots: SnapshotSchedule::Interval(t_final / Self::DEFAULT_SNAPSHOT_COUNT as f64),
            blowup_ceiling: Self::DEFAULT_BLOWUP_CEILING,
        }
    }

    pub fn with_formulation(mut self, f: Formulation) -> Self {
        self.formulation = f;
        self
    }

    pub fn with_snapshots(mut self, s: SnapshotSchedule) -> Self {
        self.snapshots = s;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!(
                "viscosity must be positive, got epsilon = {}",
                self.epsilon
            ));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.blowup_ceiling > 0.0) {
            return bad(format!(
                "blowup ceiling must be positive, got {}",
                self.blowup_ceiling
            ));
        }
        match self.snapshots {
            SnapshotSchedule::EveryNSteps(0) => bad("snapshot stride must be positive".into()),
            SnapshotSchedule::Interval(dt) if !(dt.is_finite() && dt > 0.0) => {
                bad(format!("snapshot interval must be positive, got {dt}"))
            }
            _ => Ok(()),
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Time at the end of the step.
    pub t: f64,
    pub dt_used: f64,
    /// `dt * speed / h`.
    pub advective_cfl: f64,
    /// `2 eps dt / h^2`.
    pub diffusive_cfl: f64,
    /// `||rhs||_inf` at the start of the step.
    pub rhs_linf: f64,
    /// Dissipation rate at the end of the step (U form only, else 0).
    pub dissipation: f64,
}

/// `E = ||u||_{H^1}^2`.
pub fn energy(u: &GridFunction) -> f64 {
    let h1 = u.norm_h1();
    h1 * h1
}

/// `||D+ u||^2 + ||D+ D u||^2`, the rate at which viscosity drains
/// [`energy`] in the semi-discrete scheme: `<f, D2 f> = -||D+ f||^2` exactly,
/// and `D` commutes with `D2`.
pub fn dissipation_rate(u: &GridFunction) -> f64 {
    let a = u.forward_difference().norm_l2();
    let b = u.derivative().forward_difference().norm_l2();
    a * a + b * b
}

/// Nonlocal terms and right-hand sides on one grid. Holds the factored
/// Helmholtz operator; cheap to share between threads.
#[derive(Debug, Clone)]
pub struct Solver {
    helmholtz: HelmholtzSolver,
}

impl Solver {
    pub fn new(grid: Grid) -> Self {
        Solver {
            helmholtz: HelmholtzSolver::new(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.helmholtz.grid()
    }

    pub fn helmholtz(&self) -> &HelmholtzSolver {
        &self.helmholtz
    }

    /// `G * (2 q^2 + 6 u^2)`.
    pub fn compute_p1(&self, u: &GridFunction) -> Result<GridFunction> {
        self.grid().ensure_same(u.grid())?;
        let q = u.derivative();
        let f = q.zip_map(u, |q, u| 2.0 * q * q + 6.0 * u * u);
        Ok(self.helmholtz.convolve_unchecked(&f))
    }

    /// `G * q^2`.
    pub fn compute_p2(&self, u: &GridFunction) -> Result<GridFunction> {
        self.grid().ensure_same(u.grid())?;
        Ok(self.helmholtz.convolve_unchecked(&u.derivative().square()))
    }

    /// `d/dx P1 + d^2/dx^2 P2`, the latter as `P2 - q^2`.
    pub fn source(&self, u: &GridFunction) -> Result<GridFunction> {
        let q = u.derivative();
        let p1 = self.compute_p1(u)?;
        let q2 = q.square();
        let p2 = self.helmholtz.convolve_unchecked(&q2);
        Ok(p1.derivative().add(&p2.sub(&q2)))
    }

    /// Right-hand side of the `u` equation. `epsilon = 0` is allowed here
    /// for diagnostics. The transport term uses the split
    /// `4 u u_x ~ (4/3) (u D u + D(u^2))`, which is energy-neutral under
    /// summation by parts.
    pub fn rhs(&self, u: &GridFunction, epsilon: f64) -> Result<GridFunction> {
        let du = u.derivative();
        let du2 = u.square().derivative();
        let transport = u.mul(&du).add(&du2).scale(4.0 / 3.0);
        let mut r = transport.add(&self.source(u)?);
        if epsilon != 0.0 {
            r = r.add(&u.second_difference().scale(epsilon));
        }
        r.check_finite("rhs")?;
        Ok(r)
    }

    /// Right-hand side of the `w` equation.
    pub fn rhs_w(&self, w: &GridFunction, epsilon: f64) -> Result<GridFunction> {
        self.grid().ensure_same(w.grid())?;
        let transport = w.mul(&w.derivative()).scale(2.0);
        let nonlocal = self
            .helmholtz
            .convolve_unchecked(&w.square())
            .derivative()
            .scale(3.0);
        let mut r = transport.add(&nonlocal);
        if epsilon != 0.0 {
            r = r.add(&w.second_difference().scale(epsilon));
        }
        r.check_finite("rhs_w")?;
        Ok(r)
    }

    fn rhs_for(&self, f: &GridFunction, epsilon: f64, form: Formulation) -> Result<GridFunction> {
        match form {
            Formulation::U => self.rhs(f, epsilon),
            Formulation::W => self.rhs_w(f, epsilon),
        }
    }

    /// One SSP-RK3 step of the chosen formulation.
    pub fn step(
        &self,
        f: &GridFunction,
        dt: f64,
        epsilon: f64,
        form: Formulation,
    ) -> Result<GridFunction> {
        self.step_with_rhs(f, dt, epsilon, form)
            .map(|(next, _)| next)
    }

    /// Returns the new state and the right-hand side at the old one.
    fn step_with_rhs(
        &self,
        f: &GridFunction,
        dt: f64,
        epsilon: f64,
        form: Formulation,
    ) -> Result<(GridFunction, GridFunction)> {
        let l0 = self.rhs_for(f, epsilon, form)?;
        if dt == 0.0 {
            return Ok((f.clone(), l0));
        }
        let u1 = f.zip_map(&l0, |a, b| a + dt * b);
        let l1 = self.rhs_for(&u1, epsilon, form)?;
        let u2 = f.zip_map(&u1.zip_map(&l1, |a, b| a + dt * b), |a, b| {
            0.75 * a + 0.25 * b
        });
        let l2 = self.rhs_for(&u2, epsilon, form)?;
        let u3 = f.zip_map(&u2.zip_map(&l2, |a, b| a + dt * b), |a, b| {
            a / 3.0 + 2.0 / 3.0 * b
        });
        u3.check_finite("ssp-rk3 step")?;
        Ok((u3, l0))
    }

    /// Integrates to `config.t_final`.
    pub fn run(&self, initial: &GridFunction, config: &SolverConfig) -> Result<Trajectory> {
        config.validate()?;
        self.grid().ensure_same(initial.grid())?;
        initial.check_finite("initial data")?;
        let grid = *self.grid();
        let h = grid.spacing();
        let eps = config.epsilon;
        let form = config.formulation;
        let t_end = config.t_final;

        let mut state = match form {
            Formulation::U => initial.clone(),
            Formulation::W => initial.scale(2.0).sub(&initial.derivative()),
        };
        let track = form == Formulation::U;

        let mut times = vec![0.0];
        let mut snaps = vec![state.clone()];
        let mut cum = 0.0;
        let mut cums = vec![0.0];
        let mut rate = if track { dissipation_rate(&state) } else { 0.0 };
        let mut stats = Vec::new();

        let mut t = 0.0;
        let mut steps = 0usize;
        let mut next_mark = 1usize;
        while t < t_end {
            let target = match config.snapshots {
                SnapshotSchedule::Interval(d) => {
                    let m = next_mark as f64 * d;
                    if m >= t_end * (1.0 - 1e-12) {
                        t_end
                    } else {
                        m
                    }
                }
                SnapshotSchedule::EveryNSteps(_) => t_end,
            };
            let remaining = target - t;
            let dt_stable = stable_dt_for(&state, config, &grid);
            let (dt, lands) = if remaining <= dt_stable * (1.0 + 1e-9) {
                (remaining, true)
            } else if remaining < 2.0 * dt_stable {
                // two even steps instead of a full one and a sliver
                (0.5 * remaining, false)
            } else {
                (dt_stable, false)
            };

            let (next, l0) = self
                .step_with_rhs(&state, dt, eps, form)
                .map_err(|e| match e {
                    Error::NonFinite { .. } => Error::BlowUp {
                        t,
                        reason: "non-finite value during step".into(),
                        stats: stats.last().copied(),
                    },
                    other => other,
                })?;
            let t_new = if lands { target } else { t + dt };
            let next_rate = if track { dissipation_rate(&next) } else { 0.0 };
            cum += 0.5 * dt * (rate + next_rate);
            rate = next_rate;

            let speed = transport_speed(&state, form);
            let st = StepStats {
                t: t_new,
                dt_used: dt,
                advective_cfl: dt * speed / h,
                diffusive_cfl: 2.0 * eps * dt / (h * h),
                rhs_linf: l0.norm_linf(),
                dissipation: next_rate,
            };
            stats.push(st);
            let b = blowup_functional(&next);
            if !(b <= config.blowup_ceiling) {
                return Err(Error::BlowUp {
                    t: t_new,
                    reason: format!(
                        "blow-up functional {b:.6e} exceeds ceiling {:.6e}",
                        config.blowup_ceiling
                    ),
                    stats: Some(st),
                });
            }
            state = next;
            t = t_new;
            steps += 1;

            let record = match config.snapshots {
                SnapshotSchedule::Interval(_) => lands,
                SnapshotSchedule::EveryNSteps(n) => steps.is_multiple_of(n) || t >= t_end,
            };
            if lands && target == t_end {
                t = t_end;
            }
            if record {
                times.push(t);
                snaps.push(state.clone());
                cums.push(cum);
                next_mark += 1;
            }
        }

        let traj = Trajectory::new(grid, eps, form, times, snaps)?;
        Ok(traj.with_run_data(track.then_some(cums), stats, config.clone()))
    }
}

fn transport_speed(f: &GridFunction, form: Formulation) -> f64 {
    match form {
        Formulation::U => f
            .derivative()
            .zip_map(f, |q, u| 4.0 * u - 2.0 * q)
            .norm_linf(),
        Formulation::W => 2.0 * f.norm_linf(),
    }
}

fn stable_dt_for(f: &GridFunction, config: &SolverConfig, grid: &Grid) -> f64 {
    let h = grid.spacing();
    let speed = transport_speed(f, config.formulation).max(f64::EPSILON);
    let adv = config.cfl * h / speed;
    let diff = config.cfl * h * h / (2.0 * config.epsilon);
    adv.min(diff).min(config.dt_max)
}

/// `min(cfl h / ||4u - 2q||_inf, cfl h^2 / (2 eps), dt_max)`; for the W
/// form the transport speed is `||2w||_inf`.
pub fn stable_dt(u: &GridFunction, config: &SolverConfig) -> f64 {
    stable_dt_for(u, config, u.grid())
}

pub fn compute_p1(u: &GridFunction) -> GridFunction {
    Solver::new(*u.grid()).compute_p1(u).expect("same grid")
}

pub fn compute_p2(u: &GridFunction) -> GridFunction {
    Solver::new(*u.grid()).compute_p2(u).expect("same grid")
}

pub fn rhs(u: &GridFunction, epsilon: f64) -> Result<GridFunction> {
    Solver::new(*u.grid()).rhs(u, epsilon)
}

pub fn rhs_w(w: &GridFunction, epsilon: f64) -> Result<GridFunction> {
    Solver::new(*w.grid()).rhs_w(w, epsilon)
}

pub fn step_ssprk3(u: &GridFunction, dt: f64, epsilon: f64) -> Result<GridFunction> {
    Solver::new(*u.grid()).step(u, dt, epsilon, Formulation::U)
}

pub fn run(u0: &GridFunction, config: &SolverConfig) -> Result<Trajectory> {
    Solver::new(*u0.grid()).run(u0, config)
}
