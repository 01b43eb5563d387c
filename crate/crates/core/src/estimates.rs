//! A-priori estimates checked against trajectories.
//!
//! Each check pairs a measured norm with its analytic bound at every
//! snapshot and records the signed margin `bound - measured`. Bounds use
//! the norms of the unmollified data ([`InitialNorms`]); mollification only
//! shrinks them, so this is the conservative choice.
//!
//! | check | measured | bound |
//! |---|---|---|
//! | `h1` | `E(t) = ‖u‖²_{H¹}` | `E(0)` |
//! | `l1` | `‖u_x‖_{L¹}` | `‖u0'‖_{L¹} + 8‖u0‖²_{H¹} t` |
//! | `bv` | `‖u_xx‖_{L¹}` | `‖u0'‖_{BV} + 18‖u0‖²_{H¹} t` |
//! | `linf` | `‖u_x‖_∞` | same as `bv` |
//! | `time_bv` | `‖∂_t u_x‖_{L¹}` | `C_t` |
//! | `p_bounds` | `‖P1‖_{L²}, ‖∂P1‖_{L²}, ‖P2‖_{L²}, ‖P1‖_∞` | `{6, 6, 1, 6}·‖u0‖²_{H¹}` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::initialdata::InitialNorms;
use crate::io::{fmt17, write_json};
use crate::solver::{energy, Formulation, Solver};
use crate::trajectory::Trajectory;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub tolerance: f64,
    pub passed: bool,
    pub series: Vec<BoundSample>,
    /// `|E(t) - E(0) + 2 eps int_0^t D|` for the energy check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<Vec<f64>>,
}

impl BoundReport {
    fn build(name: &str, tolerance: f64, series: Vec<BoundSample>) -> Self {
        let passed = series
            .iter()
            .all(|s| s.margin.is_finite() && s.margin >= -tolerance * s.bound.max(1.0));
        BoundReport {
            bound_name: name.to_string(),
            tolerance,
            passed,
            series,
            defect: None,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.series
            .iter()
            .map(|s| s.margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest relative violation `-margin / bound` (negative when every
    /// sample is strictly inside its bound).
    pub fn worst_relative_margin(&self) -> f64 {
        self.series
            .iter()
            .map(|s| -s.margin / s.bound.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The bound curve of each component is nondecreasing in `t`.
    pub fn bound_nondecreasing(&self) -> bool {
        let mut comps: Vec<Option<&str>> =
            self.series.iter().map(|s| s.component.as_deref()).collect();
        comps.dedup();
        comps.iter().all(|c| {
            let b: Vec<f64> = self
                .series
                .iter()
                .filter(|s| s.component.as_deref() == *c)
                .map(|s| s.bound)
                .collect();
            b.windows(2).all(|w| w[1] >= w[0])
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Flat twin of the JSON: `bound_name,t,component,measured,bound,margin`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "bound_name",
            "t",
            "component",
            "measured",
            "bound",
            "margin",
        ])?;
        for s in &self.series {
            w.write_record([
                self.bound_name.as_str(),
                &fmt17(s.t),
                s.component.as_deref().unwrap_or(""),
                &fmt17(s.measured),
                &fmt17(s.bound),
                &fmt17(s.margin),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample(t: f64, component: Option<&str>, measured: f64, bound: f64) -> BoundSample {
    BoundSample {
        t,
        component: component.map(str::to_string),
        measured,
        bound,
        margin: bound - measured,
    }
}

fn require_u_form(traj: &Trajectory) -> Result<()> {
    match traj.formulation() {
        Formulation::U => Ok(()),
        Formulation::W => Err(Error::Config(
            "estimates are stated for u; convert or rerun in U_FORM".into(),
        )),
    }
}

/// `||u_x||_inf + ||u_xx||_inf`; a run is aborted when this exceeds the
/// configured ceiling.
pub fn blowup_functional(u: &GridFunction) -> f64 {
    let q = u.derivative();
    q.norm_linf() + q.derivative().norm_linf()
}

/// `||u0'||_BV + 18 ||u0||_{H^1}^2 t`, shared by the BV and sup bounds.
pub fn slope_bound(norms: &InitialNorms, t: f64) -> f64 {
    norms.slope_bv + 18.0 * norms.h1_squared() * t
}

pub fn l1_bound(norms: &InitialNorms, t: f64) -> f64 {
    norms.slope_l1 + 8.0 * norms.h1_squared() * t
}

/// `C_t = ||u0'||_BV / t + 3 (||u0'||_BV + 18 ||u0||^2 t)^2 + 4 ||u0||^2`.
pub fn time_bv_constant(norms: &InitialNorms, t: f64) -> f64 {
    let s = slope_bound(norms, t);
    norms.slope_bv / t + 3.0 * s * s + 4.0 * norms.h1_squared()
}

/// Energy never exceeds its initial value; the viscous loss accounts for
/// the difference up to the recorded defect.
pub fn check_h1(traj: &Trajectory) -> Result<BoundReport> {
    require_u_form(traj)?;
    let e0 = energy(traj.initial());
    let es: Vec<f64> = traj.snapshots().iter().map(energy).collect();
    let series = traj
        .times()
        .iter()
        .zip(&es)
        .map(|(&t, &e)| sample(t, None, e, e0))
        .collect();
    let mut report = BoundReport::build("h1", DEFAULT_TOLERANCE, series);
    if let Some(d) = traj.dissipation() {
        let eps = traj.epsilon();
        report.defect = Some(
            es.iter()
                .zip(d)
                .map(|(e, d)| (e - e0 + 2.0 * eps * d).abs())
                .collect(),
        );
    }
    Ok(report)
}

impl BoundReport {
    /// Final defect over `E(0)`; `None` when the trajectory carried no
    /// dissipation record or the energy is zero.
    pub fn relative_defect(&self) -> Option<f64> {
        let d = *self.defect.as_ref()?.last()?;
        let e0 = self.series.first()?.bound;
        if e0 > 0.0 {
            Some(d / e0)
        } else {
            Some(d)
        }
    }
}

pub fn check_l1(traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    require_u_form(traj)?;
    let series = traj
        .times()
        .iter()
        .zip(traj.snapshots())
        .map(|(&t, u)| sample(t, None, u.derivative().norm_l1(), l1_bound(norms, t)))
        .collect();
    Ok(BoundReport::build("l1", DEFAULT_TOLERANCE, series))
}

pub fn check_bv(traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    require_u_form(traj)?;
    let series = traj
        .times()
        .iter()
        .zip(traj.snapshots())
        .map(|(&t, u)| {
            sample(
                t,
                None,
                u.derivative().derivative().norm_l1(),
                slope_bound(norms, t),
            )
        })
        .collect();
    Ok(BoundReport::build("bv", DEFAULT_TOLERANCE, series))
}

pub fn check_linf(traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    require_u_form(traj)?;
    let series = traj
        .times()
        .iter()
        .zip(traj.snapshots())
        .map(|(&t, u)| sample(t, None, u.derivative().norm_linf(), slope_bound(norms, t)))
        .collect();
    Ok(BoundReport::build("linf", DEFAULT_TOLERANCE, series))
}

/// `d/dt u_x` is evaluated as `D(rhs(u))`, exact for the semi-discrete
/// system. `t = 0` is skipped since `C_t` has a `1/t` term.
pub fn check_time_bv(traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    require_u_form(traj)?;
    let solver = Solver::new(*traj.grid());
    let mut series = Vec::new();
    for (&t, u) in traj.times().iter().zip(traj.snapshots()) {
        if t <= 0.0 {
            continue;
        }
        let qt = solver.rhs(u, traj.epsilon())?.derivative();
        series.push(sample(t, None, qt.norm_l1(), time_bv_constant(norms, t)));
    }
    Ok(BoundReport::build("time_bv", DEFAULT_TOLERANCE, series))
}

pub const P_COMPONENTS: [(&str, f64); 4] = [
    ("P1_L2", 6.0),
    ("dP1_L2", 6.0),
    ("P2_L2", 1.0),
    ("P1_Linf", 6.0),
];

pub fn check_p_bounds(traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    require_u_form(traj)?;
    let solver = Solver::new(*traj.grid());
    let h1sq = norms.h1_squared();
    let mut per_component: [Vec<BoundSample>; 4] = Default::default();
    for (&t, u) in traj.times().iter().zip(traj.snapshots()) {
        let p1 = solver.compute_p1(u)?;
        let p2 = solver.compute_p2(u)?;
        let measured = [
            p1.norm_l2(),
            p1.derivative().norm_l2(),
            p2.norm_l2(),
            p1.norm_linf(),
        ];
        for (k, (name, c)) in P_COMPONENTS.iter().enumerate() {
            per_component[k].push(sample(t, Some(name), measured[k], c * h1sq));
        }
    }
    let series = per_component.into_iter().flatten().collect();
    Ok(BoundReport::build("p_bounds", DEFAULT_TOLERANCE, series))
}

/// All six checks in a fixed order.
pub fn check_all(traj: &Trajectory, norms: &InitialNorms) -> Result<Vec<BoundReport>> {
    Ok(vec![
        check_h1(traj)?,
        check_l1(traj, norms)?,
        check_bv(traj, norms)?,
        check_linf(traj, norms)?,
        check_time_bv(traj, norms)?,
        check_p_bounds(traj, norms)?,
    ])
}

/// Names accepted by [`check_named`], in [`check_all`] order.
pub const CHECK_NAMES: [&str; 6] = ["h1", "l1", "bv", "linf", "time_bv", "p_bounds"];

pub fn check_named(name: &str, traj: &Trajectory, norms: &InitialNorms) -> Result<BoundReport> {
    match name {
        "h1" => check_h1(traj),
        "l1" => check_l1(traj, norms),
        "bv" => check_bv(traj, norms),
        "linf" => check_linf(traj, norms),
        "time_bv" => check_time_bv(traj, norms),
        "p_bounds" => check_p_bounds(traj, norms),
        other => Err(Error::Config(format!(
            "unknown check `{other}`; expected one of {CHECK_NAMES:?}"
        ))),
    }
}
