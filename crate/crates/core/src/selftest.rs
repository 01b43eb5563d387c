//! Executable smoke suite: exact identities that must hold on any correct
//! build (constants, zero fields, round trips, exit codes). Runs in well
//! under a second.

use std::path::PathBuf;

use crate::entropy::{
    certify, entropy_residual, pair_kruzkov_smooth, pair_linear, pair_quadratic, weak_residual,
    TestFunction, Tolerances,
};
use crate::error::Error;
use crate::estimates::{
    blowup_functional, check_all, check_bv, check_h1, check_l1, check_linf, check_p_bounds,
    check_time_bv,
};
use crate::grid::{Grid, GridFunction};
use crate::helmholtz::HelmholtzSolver;
use crate::initialdata::{ic_from_csv, ic_gaussian, ic_peakon, mollifier_kernel, InitialNorms};
use crate::solver::{stable_dt, SnapshotSchedule, Solver, SolverConfig};
use crate::sweep::{cauchy_table, run_sweep, SweepConfig};
use crate::trajectory::Trajectory;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(e.to_string())
    }
}

type Check = Result<(), Failure>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(Failure(msg()))
    }
}

fn max_abs(f: &GridFunction) -> f64 {
    f.norm_linf()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn all_equal(f: &GridFunction, c: f64) -> bool {
    f.values().iter().all(|v| *v == c)
}

fn grid() -> Grid {
    Grid::new(40.0, 128).expect("static grid")
}

fn constant(c: f64) -> GridFunction {
    GridFunction::constant(grid(), c).expect("finite constant")
}

fn random_field(g: Grid, seed: u64) -> GridFunction {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v = (0..g.cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::new(g, v).expect("finite samples")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gch-selftest-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn uniform_times(t_final: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_final * k as f64 / n as f64).collect()
}

// ---- grid ----

fn derivative_of_constant() -> Check {
    let d = constant(3.0).derivative();
    ensure(all_equal(&d, 0.0), || {
        format!("max |D 3| = {}", max_abs(&d))
    })
}

fn zero_norms() -> Check {
    let z = GridFunction::zeros(grid());
    ensure(
        z.norm_l1() == 0.0 && z.norm_l2() == 0.0 && z.norm_linf() == 0.0 && z.norm_h1() == 0.0,
        || "zero field has a nonzero norm".into(),
    )
}

fn discrete_delta() -> Check {
    let g = grid();
    let mut v = vec![0.0; g.cells()];
    v[17] = 1.0 / g.spacing();
    let l1 = GridFunction::new(g, v)?.norm_l1();
    ensure(close(l1, 1.0, 1e-14), || format!("l1 of delta = {l1}"))
}

fn h1_of_constant() -> Check {
    let n = constant(2.0).norm_h1();
    let want = 2.0 * 40f64.sqrt();
    ensure(close(n, want, 1e-13), || format!("{n} vs {want}"))
}

fn bv_of_constant_and_spike() -> Check {
    ensure(constant(-1.5).seminorm_bv() == 0.0, || {
        "constant has variation".into()
    })?;
    let g = grid();
    let mut v = vec![0.0; g.cells()];
    v[40] = 2.5;
    let bv = GridFunction::new(g, v)?.seminorm_bv();
    ensure(bv == 5.0, || format!("spike variation {bv}"))
}

// ---- helmholtz ----

fn green_fixes_constants() -> Check {
    let hs = HelmholtzSolver::new(grid());
    let v = hs.green_convolve(&constant(1.0))?;
    ensure(v.values().iter().all(|x| close(*x, 1.0, 1e-12)), || {
        "G*1 != 1".into()
    })?;
    let d = hs.green_dx(&constant(0.7))?;
    ensure(max_abs(&d) <= 1e-14, || {
        format!("green_dx(c) = {}", max_abs(&d))
    })?;
    let dd = hs.green_dxx(&constant(1.0))?;
    ensure(max_abs(&dd) <= 1e-12, || {
        format!("green_dxx(1) = {}", max_abs(&dd))
    })
}

fn green_commutation() -> Check {
    let g = grid();
    let hs = HelmholtzSolver::new(g);
    let f = random_field(g, 7);
    let a = hs.green_dx(&f)?;
    let b = hs.green_convolve(&f)?.derivative();
    let e = max_abs(&a.sub(&b));
    ensure(e <= 1e-10, || format!("commutator {e}"))?;
    let c = hs.green_dxx(&f)?;
    let d = hs.green_convolve(&f)?.second_difference();
    let e = max_abs(&c.sub(&d));
    ensure(e <= 1e-10, || {
        format!("second-derivative rearrangement {e}")
    })
}

// ---- initial data ----

fn kernel_and_constants() -> Check {
    let g = grid();
    for width in [1.0, 2.5] {
        let k = mollifier_kernel(width, g)?;
        let mass = k.samples().integral();
        ensure(close(mass, 1.0, 1e-13), || format!("kernel mass {mass}"))?;
        let m = k.mollify(&constant(0.8))?;
        ensure(m.values().iter().all(|x| close(*x, 0.8, 1e-13)), || {
            "mollified constant moved".into()
        })?;
    }
    Ok(())
}

fn peakon_and_gaussian() -> Check {
    let g = grid();
    let p = ic_peakon(1.0, 0.0, g)?;
    let at0 = p.values()[g.cells() / 2];
    ensure(
        close(at0, 1.0, 1e-14) && g.node(g.cells() / 2) == 0.0,
        || format!("peak value {at0}"),
    )?;
    let z = ic_gaussian(0.0, 1.0, g)?;
    ensure(all_equal(&z, 0.0), || "a = 0 gaussian is not zero".into())
}

fn csv_round_trip() -> Check {
    let g = grid();
    let f = random_field(g, 11);
    let dir = scratch_dir("csv");
    std::fs::create_dir_all(&dir)?;
    let p = dir.join("u0.csv");
    f.save_csv(&p)?;
    let back = ic_from_csv(&p, g)?;
    let _ = std::fs::remove_dir_all(&dir);
    ensure(back.values() == f.values(), || {
        "csv round trip changed values".into()
    })
}

// ---- solver ----

fn source_terms_of_constants() -> Check {
    let s = Solver::new(grid());
    let c = 0.6;
    let p1 = s.compute_p1(&constant(c))?;
    ensure(
        p1.values().iter().all(|v| close(*v, 6.0 * c * c, 1e-12)),
        || "P1(c) != 6c^2".into(),
    )?;
    let z = GridFunction::zeros(grid());
    ensure(all_equal(&s.compute_p1(&z)?, 0.0), || "P1(0) != 0".into())?;
    for u in [constant(c), z.clone()] {
        let p2 = s.compute_p2(&u)?;
        ensure(max_abs(&p2) <= 1e-14, || format!("P2 = {}", max_abs(&p2)))?;
        let r = s.rhs(&u, 0.01)?;
        ensure(max_abs(&r) <= 1e-12, || format!("rhs = {}", max_abs(&r)))?;
        let rw = s.rhs_w(&u, 0.01)?;
        ensure(max_abs(&rw) <= 1e-12, || {
            format!("rhs_w = {}", max_abs(&rw))
        })?;
    }
    Ok(())
}

fn stable_dt_limits() -> Check {
    let z = GridFunction::zeros(grid());
    let cfg = SolverConfig::new(0.5, 1.0);
    let h = grid().spacing();
    let want = cfg.dt_max.min(cfg.cfl * h * h / (2.0 * 0.5));
    let dt = stable_dt(&z, &cfg);
    ensure(dt == want, || format!("dt {dt} vs {want}"))?;
    let fine = GridFunction::zeros(Grid::new(40.0, 256)?);
    let big = SolverConfig::new(50.0, 1.0);
    let ratio = stable_dt(&z, &big) / stable_dt(&fine, &big);
    ensure(close(ratio, 4.0, 1e-12), || {
        format!("diffusive dt ratio {ratio}")
    })
}

fn step_identities() -> Check {
    let s = Solver::new(grid());
    let c = constant(0.9);
    let after = s.step(&c, 0.01, 0.01, crate::solver::Formulation::U)?;
    ensure(max_abs(&after.sub(&c)) <= 1e-14, || {
        "constant moved under a step".into()
    })?;
    let f = random_field(grid(), 3);
    let same = s.step(&f, 0.0, 0.01, crate::solver::Formulation::U)?;
    ensure(same.values() == f.values(), || {
        "dt = 0 step is not the identity".into()
    })
}

fn steady_runs() -> Check {
    let cfg = SolverConfig::new(0.01, 0.1).with_snapshots(SnapshotSchedule::Interval(0.01));
    let s = Solver::new(grid());
    let z = s.run(&GridFunction::zeros(grid()), &cfg)?;
    ensure(z.snapshots().iter().all(|u| all_equal(u, 0.0)), || {
        "zero data moved".into()
    })?;
    let c = s.run(&constant(0.4), &cfg)?;
    let drift = c
        .snapshots()
        .iter()
        .map(|u| max_abs(&u.sub(&constant(0.4))))
        .fold(0.0, f64::max);
    ensure(drift <= 1e-13, || {
        format!("constant data drifted by {drift}")
    })
}

// ---- estimates ----

fn zero_and_constant_bounds() -> Check {
    let times = uniform_times(1.0, 20);
    let zero = Trajectory::stationary(GridFunction::zeros(grid()), 0.01, times.clone())?;
    let zn = InitialNorms::of(zero.initial());
    for r in check_all(&zero, &zn)? {
        ensure(r.passed, || format!("{} failed on zero data", r.bound_name))?;
        ensure(r.series.iter().all(|s| s.measured == 0.0), || {
            format!("{}: nonzero measurement", r.bound_name)
        })?;
    }
    let h1 = check_h1(&zero)?;
    ensure(h1.series.iter().all(|s| s.margin == 0.0), || {
        "zero H1 margins".into()
    })?;

    let c = Trajectory::stationary(constant(0.5), 0.01, times)?;
    let cn = InitialNorms::of(c.initial());
    let h1 = check_h1(&c)?;
    ensure(
        h1.passed && h1.series.iter().all(|s| s.measured == s.bound),
        || "constant energy moved".into(),
    )?;
    ensure(h1.relative_defect().unwrap_or(0.0) == 0.0, || {
        "constant defect nonzero".into()
    })?;
    let bv = check_bv(&c, &cn)?;
    ensure(
        bv.passed
            && bv
                .series
                .iter()
                .all(|s| s.measured == 0.0 && s.bound >= 0.0),
        || "constant bv".into(),
    )?;
    let li = check_linf(&c, &cn)?;
    ensure(li.passed, || "constant linf".into())?;
    let p = check_p_bounds(&c, &cn)?;
    ensure(p.passed, || "constant P bounds".into())?;
    let tb = check_time_bv(&c, &cn)?;
    ensure(tb.bound_nondecreasing() || tb.series.is_empty(), || {
        "C_t not monotone".into()
    })
}

fn l1_at_initial_time() -> Check {
    let g = grid();
    let raw = ic_peakon(1.0, 0.0, g)?;
    let norms = InitialNorms::of(&raw);
    let u0 = mollifier_kernel(1.0, g)?.mollify(&raw)?;
    let traj = Trajectory::stationary(u0, 0.01, vec![0.0, 0.1])?;
    let r = check_l1(&traj, &norms)?;
    let s0 = &r.series[0];
    ensure(
        s0.bound == norms.slope_l1 && s0.measured <= s0.bound,
        || format!("t = 0: measured {} bound {}", s0.measured, s0.bound),
    )
}

fn blowup_functional_simple() -> Check {
    ensure(
        blowup_functional(&GridFunction::zeros(grid())) == 0.0,
        || "zero field".into(),
    )?;
    // a ramp away from the wrap cells has slope exactly a
    let g = grid();
    let ramp = GridFunction::from_fn(g, |x| 0.3 * x)?;
    let d = ramp.derivative();
    let interior = d.values()[2..g.cells() - 2]
        .iter()
        .all(|v| close(*v, 0.3, 1e-12));
    ensure(interior, || "ramp slope".into())
}

// ---- entropy ----

fn entropy_pairs() -> Check {
    let q = pair_quadratic();
    ensure(close(q.flux(1.0), 1.0 / 3.0, 1e-15), || "q(1)".into())?;
    ensure(q.flux(0.0) == 0.0, || "q(0)".into())?;
    ensure(close(q.flux(-2.0), -8.0 / 3.0, 1e-15), || "q(-2)".into())?;
    let k = pair_kruzkov_smooth(0.7, 1e-3)?;
    ensure(k.flux(0.7) == 0.0 && k.eta(0.7) == 0.0, || {
        "kruzkov vertex".into()
    })?;
    ensure((-50..=50).all(|i| k.eta(i as f64 * 0.1) >= 0.0), || {
        "kruzkov eta < 0".into()
    })
}

fn residuals_of_steady_states() -> Check {
    // the steady residual is pure quadrature error of the bump in x
    let g = Grid::new(40.0, 1024)?;
    let times = uniform_times(1.0, 200);
    let phi = TestFunction::new(0.5, 0.3, 1.0, 5.0)?;
    let zero = Trajectory::stationary(GridFunction::zeros(g), 0.01, times.clone())?;
    let w = weak_residual(&zero, &phi)?;
    ensure(w.raw == 0.0, || format!("zero weak residual {}", w.raw))?;
    let e = entropy_residual(&zero, &pair_quadratic(), &phi, false)?;
    ensure(e.raw == 0.0, || format!("zero entropy residual {}", e.raw))?;

    let c = Trajectory::stationary(GridFunction::constant(g, 0.6)?, 0.01, times)?;
    let w = weak_residual(&c, &phi)?;
    ensure(w.raw.abs() <= 1e-9, || {
        format!("constant weak residual {}", w.raw)
    })?;
    let lin = entropy_residual(&c, &pair_linear(), &phi, false)?;
    ensure((lin.raw - w.raw).abs() <= 1e-12, || {
        format!("linear entropy {} vs weak {}", lin.raw, w.raw)
    })
}

fn certify_trivial() -> Check {
    let times = uniform_times(1.0, 100);
    let zero = Trajectory::stationary(GridFunction::zeros(grid()), 0.01, times)?;
    let phis = TestFunction::seeded_family(42, 4, 1.0);
    let empty = certify(&zero, &[], &phis, Tolerances::default(), false)?;
    ensure(empty.passed && !empty.warnings.is_empty(), || {
        "empty pair list".into()
    })?;
    let pairs = vec![pair_quadratic(), pair_kruzkov_smooth(0.0, 1e-3)?];
    let full = certify(&zero, &pairs, &phis, Tolerances::default(), false)?;
    ensure(full.passed, || {
        "zero trajectory failed certification".into()
    })
}

// ---- sweep ----

fn sweep_trivia() -> Check {
    let g = grid();
    let base = SolverConfig::new(0.01, 0.2).with_snapshots(SnapshotSchedule::Interval(0.02));
    let u0 = mollifier_kernel(1.0, g)?.mollify(&ic_peakon(0.5, 0.0, g)?)?;
    let norms = InitialNorms::of(&u0);

    let mut dup = SweepConfig::new(vec![0.01, 0.01], base.clone());
    dup.allow_duplicates = true;
    dup.threads = Some(0);
    let out = run_sweep(&u0, &norms, &dup)?;
    let d = out.report.differences[0];
    ensure(d.d == 0.0 && d.d_prime == 0.0, || {
        format!("duplicate d = {}, d' = {}", d.d, d.d_prime)
    })?;
    let rows = cauchy_table(&out.report);
    ensure(rows.len() == 1 && rows[0].d == 0.0, || {
        "duplicate table".into()
    })?;

    let mut zero_cfg = SweepConfig::new(vec![0.02, 0.01], base.clone());
    zero_cfg.threads = Some(0);
    let z = GridFunction::zeros(g);
    let out = run_sweep(&z, &InitialNorms::of(&z), &zero_cfg)?;
    ensure(
        out.report
            .differences
            .iter()
            .all(|d| d.d == 0.0 && d.d_prime == 0.0),
        || "zero data".into(),
    )?;

    let mut single = SweepConfig::new(vec![0.01], base);
    single.threads = Some(0);
    let out = run_sweep(&u0, &norms, &single)?;
    ensure(cauchy_table(&out.report).is_empty(), || {
        "single-member table".into()
    })
}

// ---- cli ----

fn cli_exit_codes() -> Check {
    use crate::cli::{main_with_args, EXIT_CONFIG, EXIT_OK};
    let dir = scratch_dir("cli");
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("out");
    let out_s = out.to_string_lossy().to_string();

    let missing = dir.join("no-such-config.json");
    let code = main_with_args([
        "gch",
        "run",
        "--config",
        &missing.to_string_lossy(),
        "--out",
        &out_s,
    ]);
    ensure(code == EXIT_CONFIG, || {
        format!("missing config exit {code}")
    })?;

    let zero_eps = dir.join("eps0.json");
    std::fs::write(
        &zero_eps,
        r#"{"grid.N": 128, "solver.epsilon": 0.0, "solver.t_final": 0.1}"#,
    )?;
    let code = main_with_args([
        "gch",
        "run",
        "--config",
        &zero_eps.to_string_lossy(),
        "--out",
        &out_s,
    ]);
    ensure(code == EXIT_CONFIG, || format!("epsilon = 0 exit {code}"))?;

    let traj_dir = dir.join("zero");
    Trajectory::stationary(GridFunction::zeros(grid()), 0.01, uniform_times(1.0, 100))?
        .save(&traj_dir)?;
    let code = main_with_args([
        "gch",
        "certify",
        "--trajectory",
        &traj_dir.to_string_lossy(),
        "--out",
        &out_s,
    ]);
    let _ = std::fs::remove_dir_all(&dir);
    ensure(code == EXIT_OK, || {
        format!("certify zero trajectory exit {code}")
    })
}

type NamedCheck = (&'static str, fn() -> Check);

const CHECKS: &[NamedCheck] = &[
    ("grid: derivative of a constant", derivative_of_constant),
    ("grid: norms of the zero field", zero_norms),
    ("grid: discrete delta has unit mass", discrete_delta),
    ("grid: H1 norm of a constant", h1_of_constant),
    (
        "grid: variation of constants and spikes",
        bv_of_constant_and_spike,
    ),
    ("helmholtz: constants", green_fixes_constants),
    ("helmholtz: operator commutation", green_commutation),
    (
        "initialdata: kernel mass and constants",
        kernel_and_constants,
    ),
    (
        "initialdata: peakon crest and zero gaussian",
        peakon_and_gaussian,
    ),
    ("initialdata: csv round trip", csv_round_trip),
    (
        "solver: constant and zero sources",
        source_terms_of_constants,
    ),
    ("solver: step size limits", stable_dt_limits),
    ("solver: step identities", step_identities),
    ("solver: steady runs", steady_runs),
    (
        "estimates: zero and constant data",
        zero_and_constant_bounds,
    ),
    ("estimates: initial slope bound", l1_at_initial_time),
    ("estimates: blow-up functional", blowup_functional_simple),
    ("entropy: pair values", entropy_pairs),
    (
        "entropy: steady-state residuals",
        residuals_of_steady_states,
    ),
    ("entropy: trivial certification", certify_trivial),
    ("sweep: duplicate, zero and single ladders", sweep_trivia),
    ("cli: exit codes", cli_exit_codes),
];

/// Runs every check in order; never panics on a failed identity.
pub fn run_all() -> Vec<SelfCheck> {
    CHECKS
        .iter()
        .map(|(name, f)| SelfCheck {
            name,
            outcome: f().map_err(|Failure(m)| m),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_check_passes() {
        for c in super::run_all() {
            assert!(c.outcome.is_ok(), "{}: {:?}", c.name, c.outcome);
        }
    }
}
