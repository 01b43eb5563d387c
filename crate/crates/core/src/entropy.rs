//! Discrete weak-form and entropy residuals on trajectories.
//!
//! For a test function `phi >= 0` and an entropy pair `(eta, q)` with
//! `q' = u eta'`, the entropy functional is
//!
//! ```text
//! R = ∫∫ eta(u) phi_t - 4 q(u) phi_x + eta'(u) S phi dx dt + ∫ eta(u0) phi(0, x) dx,
//! S = d/dx P1 + d^2/dx^2 P2,
//! ```
//!
//! and the weak functional is the same expression with `eta(u) = u`.
//! Both are evaluated by the tensor trapezoid rule on the solver's own
//! `(t, x)` samples.
//!
//! A viscous solution satisfies `R = -eps ∫∫ eta(u) phi_xx + eps ∫∫ eta''(u) u_x^2 phi`,
//! so every residual is reported raw and "corrected", i.e. with
//! `eps ∫∫ eta(u) phi_xx` added back. The corrected weak residual vanishes
//! up to discretization error and the corrected entropy residual is a
//! nonnegative dissipation term.
//!
//! Entropies and fluxes are evaluated relative to their value at `u = 0`
//! (the far-field state of decaying data). This changes nothing
//! analytically and keeps the quadrature error proportional to the
//! solution rather than to `eta(0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::initialdata::{bump, bump_prime, bump_second};
use crate::solver::{Formulation, Solver};
use crate::trajectory::Trajectory;

/// A convex entropy with its flux `q(u) = ∫ s eta'(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyPair {
    /// `eta = u^2 / 2`, `q = u^3 / 3`.
    Quadratic,
    /// `eta = u`, `q = u^2 / 2`; reduces the entropy functional to the weak one.
    Linear,
    /// `eta = sqrt((u - k)^2 + delta^2) - delta`, a smoothed `|u - k|`.
    Kruzkov { k: f64, delta: f64 },
}

pub fn pair_quadratic() -> EntropyPair {
    EntropyPair::Quadratic
}

pub fn pair_linear() -> EntropyPair {
    EntropyPair::Linear
}

pub fn pair_kruzkov_smooth(k: f64, delta: f64) -> Result<EntropyPair> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Config(format!(
            "smoothing delta must be positive, got {delta}"
        )));
    }
    if !k.is_finite() {
        return Err(Error::Config(format!(
            "Kruzkov level must be finite, got {k}"
        )));
    }
    Ok(EntropyPair::Kruzkov { k, delta })
}

impl EntropyPair {
    pub fn label(&self) -> String {
        match self {
            EntropyPair::Quadratic => "quadratic".into(),
            EntropyPair::Linear => "linear".into(),
            EntropyPair::Kruzkov { k, delta } => format!("kruzkov(k={k},delta={delta})"),
        }
    }

    pub fn eta(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Quadratic => 0.5 * u * u,
            EntropyPair::Linear => u,
            EntropyPair::Kruzkov { k, delta } => (u - k).hypot(delta) - delta,
        }
    }

    pub fn eta_prime(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Quadratic => u,
            EntropyPair::Linear => 1.0,
            EntropyPair::Kruzkov { k, delta } => (u - k) / (u - k).hypot(delta),
        }
    }

    pub fn eta_second(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Quadratic => 1.0,
            EntropyPair::Linear => 0.0,
            EntropyPair::Kruzkov { k, delta } => {
                let s = (u - k).hypot(delta);
                delta * delta / (s * s * s)
            }
        }
    }

    /// `q(u)` with `q(k) = 0` for Kruzkov pairs and `q(0) = 0` otherwise.
    pub fn flux(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Quadratic => u * u * u / 3.0,
            EntropyPair::Linear => 0.5 * u * u,
            EntropyPair::Kruzkov { k, delta } => {
                // ∫_0^r (s + k) s / sqrt(s^2 + delta^2) ds, r = u - k
                let r = u - k;
                let s = r.hypot(delta);
                0.5 * r * s - 0.5 * delta * delta * (r / delta).asinh() + k * (s - delta)
            }
        }
    }
}

/// `phi(t, x) = bump((t - t_center) / t_width) * bump(dist(x, x_center) / x_width)`
/// with `dist` the periodic offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub t_center: f64,
    pub t_width: f64,
    pub x_center: f64,
    pub x_width: f64,
}

impl TestFunction {
    pub fn new(t_center: f64, t_width: f64, x_center: f64, x_width: f64) -> Result<Self> {
        if !(t_width > 0.0 && x_width > 0.0 && t_center.is_finite() && x_center.is_finite()) {
            return Err(Error::Config(format!(
                "test function needs positive widths and finite centres, got t {t_center}±{t_width}, x {x_center}±{x_width}"
            )));
        }
        if t_center < 0.0 {
            return Err(Error::Config(format!(
                "test function centre must be at t >= 0, got {t_center}"
            )));
        }
        Ok(TestFunction {
            t_center,
            t_width,
            x_center,
            x_width,
        })
    }

    /// Draws one of the bumps used for certification: spatial half-width
    /// in `[4, 8]`, temporal half-width in `[0.2, 0.4] t_final`, support
    /// strictly inside `(0, t_final)`, centre in `[-10, 10]`.
    pub fn random_admissible(rng: &mut impl Rng, t_final: f64) -> Self {
        let t_width = rng.gen_range(0.2..=0.4) * t_final;
        let t_center = rng.gen_range(t_width..=t_final - t_width);
        let x_width = rng.gen_range(4.0..=8.0);
        let x_center = rng.gen_range(-10.0..=10.0);
        TestFunction {
            t_center,
            t_width,
            x_center,
            x_width,
        }
    }

    pub fn seeded_family(seed: u64, count: usize, t_final: f64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| Self::random_admissible(&mut rng, t_final))
            .collect()
    }

    pub fn t_support(&self) -> (f64, f64) {
        (
            (self.t_center - self.t_width).max(0.0),
            self.t_center + self.t_width,
        )
    }

    pub fn psi_t(&self, t: f64) -> f64 {
        bump((t - self.t_center) / self.t_width)
    }

    pub fn psi_t_prime(&self, t: f64) -> f64 {
        bump_prime((t - self.t_center) / self.t_width) / self.t_width
    }

    fn offset(&self, grid: &Grid, x: f64) -> f64 {
        grid.periodic_offset(x, self.x_center) / self.x_width
    }

    pub fn psi_x(&self, grid: &Grid, x: f64) -> f64 {
        bump(self.offset(grid, x))
    }

    pub fn psi_x_prime(&self, grid: &Grid, x: f64) -> f64 {
        bump_prime(self.offset(grid, x)) / self.x_width
    }

    pub fn psi_x_second(&self, grid: &Grid, x: f64) -> f64 {
        bump_second(self.offset(grid, x)) / (self.x_width * self.x_width)
    }

    pub fn value(&self, grid: &Grid, t: f64, x: f64) -> f64 {
        self.psi_t(t) * self.psi_x(grid, x)
    }

    /// Support and sampling checks against a trajectory.
    pub fn check_against(&self, traj: &Trajectory) -> Result<()> {
        const MIN_SAMPLES: usize = 8;
        let (lo, hi) = self.t_support();
        let t_end = traj.t_final();
        if hi > t_end {
            return Err(Error::SupportOutsideWindow {
                t_lo: lo,
                t_hi: hi,
                t_end,
            });
        }
        if 2.0 * self.x_width >= traj.grid().length() {
            return Err(Error::Config(format!(
                "test function spatial support {} wraps the period {}",
                2.0 * self.x_width,
                traj.grid().length()
            )));
        }
        let found = traj.times().iter().filter(|&&t| t > lo && t < hi).count();
        if found < MIN_SAMPLES {
            return Err(Error::UnderSampledSupport {
                found,
                required: MIN_SAMPLES,
            });
        }
        Ok(())
    }
}

/// A residual and the integral of the absolute integrand it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub raw: f64,
    /// `raw + eps ∫∫ eta(u) phi_xx`.
    pub corrected: f64,
    pub scale: f64,
}

/// Per-trajectory data shared by every residual evaluation: the source
/// `S` at each snapshot and the trapezoid weights in time.
#[derive(Debug)]
pub struct ResidualContext<'a> {
    traj: &'a Trajectory,
    sources: Vec<GridFunction>,
    weights: Vec<f64>,
}

impl<'a> ResidualContext<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<Self> {
        if traj.formulation() != Formulation::U {
            return Err(Error::Config(
                "residuals are defined for U_FORM trajectories".into(),
            ));
        }
        let solver = Solver::new(*traj.grid());
        let sources = traj
            .snapshots()
            .par_iter()
            .map(|u| solver.source(u))
            .collect::<Result<Vec<_>>>()?;
        let t = traj.times();
        let n = t.len();
        let weights = (0..n)
            .map(|k| {
                let left = if k > 0 { t[k] - t[k - 1] } else { 0.0 };
                let right = if k + 1 < n { t[k + 1] - t[k] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(ResidualContext {
            traj,
            sources,
            weights,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    /// `∫∫ a(u) phi_t + b(u) phi_x + c(u) S phi + ∫ init(u0) phi(0)`.
    fn integrate(
        &self,
        phi: &TestFunction,
        a: impl Fn(f64) -> f64,
        b: impl Fn(f64) -> f64,
        c: impl Fn(f64) -> f64,
        init: impl Fn(f64) -> f64,
    ) -> Result<Residual> {
        phi.check_against(self.traj)?;
        let grid = self.traj.grid();
        let h = grid.spacing();
        // spatial factors restricted to the support
        let cols: Vec<(usize, f64, f64, f64)> = (0..grid.cells())
            .filter_map(|i| {
                let x = grid.node(i);
                let p = phi.psi_x(grid, x);
                (p != 0.0).then(|| (i, p, phi.psi_x_prime(grid, x), phi.psi_x_second(grid, x)))
            })
            .collect();
        let eps = self.traj.epsilon();

        let (mut raw, mut visc, mut scale) = (0.0, 0.0, 0.0);
        for (k, &t) in self.traj.times().iter().enumerate() {
            let pt = phi.psi_t(t);
            let dpt = phi.psi_t_prime(t);
            if pt == 0.0 && dpt == 0.0 {
                continue;
            }
            let u = self.traj.snapshots()[k].values();
            let s = self.sources[k].values();
            let (mut r, mut v, mut m) = (0.0, 0.0, 0.0);
            for &(i, px, dpx, ddpx) in &cols {
                let ui = u[i];
                let f = a(ui) * dpt * px + b(ui) * pt * dpx + c(ui) * s[i] * pt * px;
                r += f;
                m += f.abs();
                v += a(ui) * pt * ddpx;
            }
            let w = self.weights[k] * h;
            raw += w * r;
            visc += w * v;
            scale += w * m;
        }

        let p0 = phi.psi_t(0.0);
        if p0 != 0.0 {
            let u0 = self.traj.initial().values();
            let mut r = 0.0;
            for &(i, px, _, _) in &cols {
                r += init(u0[i]) * p0 * px;
            }
            raw += h * r;
            scale += h * r.abs();
        }
        Ok(Residual {
            raw,
            corrected: raw + eps * visc,
            scale,
        })
    }

    pub fn weak_residual(&self, phi: &TestFunction) -> Result<Residual> {
        self.integrate(phi, |u| u, |u| -2.0 * u * u, |_| 1.0, |u| u)
    }

    /// With `paper_literal` the initial term uses `eta'(u0)` instead of `eta(u0)`.
    pub fn entropy_residual(
        &self,
        pair: &EntropyPair,
        phi: &TestFunction,
        paper_literal: bool,
    ) -> Result<Residual> {
        // Shifting eta or q by a constant leaves the functional unchanged
        // (∫∫ phi_t + ∫ phi(0) = 0, ∫ phi_x = 0), but the constant part would
        // survive as pure quadrature error. Anchor both at the far-field u = 0.
        // The literal initial term is not shift-invariant, so eta stays as is.
        let eta0 = if paper_literal { 0.0 } else { pair.eta(0.0) };
        let q0 = pair.flux(0.0);
        let init = |u: f64| {
            if paper_literal {
                pair.eta_prime(u)
            } else {
                pair.eta(u) - eta0
            }
        };
        self.integrate(
            phi,
            |u| pair.eta(u) - eta0,
            |u| -4.0 * (pair.flux(u) - q0),
            |u| pair.eta_prime(u),
            init,
        )
    }
}

pub fn weak_residual(traj: &Trajectory, phi: &TestFunction) -> Result<Residual> {
    ResidualContext::new(traj)?.weak_residual(phi)
}

pub fn entropy_residual(
    traj: &Trajectory,
    pair: &EntropyPair,
    phi: &TestFunction,
    paper_literal: bool,
) -> Result<Residual> {
    ResidualContext::new(traj)?.entropy_residual(pair, phi, paper_literal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Entropy residuals must satisfy `corrected >= -entropy * max(1, scale)`.
    pub entropy: f64,
    /// Weak residuals must satisfy `|corrected| <= weak * max(1, scale)`.
    pub weak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            entropy: 1e-6,
            weak: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationEntry {
    pub pair: String,
    pub phi_params: TestFunction,
    pub weak_residual: Residual,
    pub entropy_residual: Residual,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub entries: Vec<CertificationEntry>,
    pub tolerances: Tolerances,
    pub paper_literal: bool,
    pub passed: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CertificationReport {
    /// Smallest `corrected / max(1, scale)` over all entropy entries.
    pub fn worst_entropy_ratio(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.entropy_residual.corrected / e.entropy_residual.scale.max(1.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// Weak and entropy residuals over `pairs x phis`, evaluated in parallel
/// and reported in input order.
pub fn certify(
    traj: &Trajectory,
    pairs: &[EntropyPair],
    phis: &[TestFunction],
    tolerances: Tolerances,
    paper_literal: bool,
) -> Result<CertificationReport> {
    let mut warnings = Vec::new();
    if pairs.is_empty() {
        warnings.push("no entropy pairs given; certification is vacuous".to_string());
    }
    if phis.is_empty() {
        warnings.push("no test functions given; certification is vacuous".to_string());
    }
    for phi in phis {
        phi.check_against(traj)?;
    }
    let ctx = ResidualContext::new(traj)?;
    let weak: Vec<Residual> = phis
        .par_iter()
        .map(|phi| ctx.weak_residual(phi))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, &EntropyPair)> = pairs
        .iter()
        .flat_map(|p| (0..phis.len()).map(move |j| (j, p)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(j, pair)| {
            let phi = &phis[j];
            let e = ctx.entropy_residual(pair, phi, paper_literal)?;
            let w = weak[j];
            let passed = e.corrected >= -tolerances.entropy * e.scale.max(1.0)
                && w.corrected.abs() <= tolerances.weak * w.scale.max(1.0);
            Ok(CertificationEntry {
                pair: pair.label(),
                phi_params: *phi,
                weak_residual: w,
                entropy_residual: e,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = entries.iter().all(|e| e.passed);
    Ok(CertificationReport {
        entries,
        tolerances,
        paper_literal,
        passed,
        warnings,
    })
}
