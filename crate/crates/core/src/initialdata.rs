//! Mollifier, mollified initial data, and the catalogue of admissible
//! initial conditions (`u0` in H^1 with `u0'` in L^1 and BV).

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// The bump `e^{1/(x^2-1)}` on `|x| < 1`, zero outside.
pub fn bump(x: f64) -> f64 {
    let s = x * x;
    if s < 1.0 {
        (1.0 / (s - 1.0)).exp()
    } else {
        0.0
    }
}

/// First derivative of [`bump`].
pub fn bump_prime(x: f64) -> f64 {
    let s = x * x - 1.0;
    if s < 0.0 {
        bump(x) * (-2.0 * x / (s * s))
    } else {
        0.0
    }
}

/// Second derivative of [`bump`].
pub fn bump_second(x: f64) -> f64 {
    let s = x * x - 1.0;
    if s < 0.0 {
        // (log bump)' = -2x / s^2, (log bump)'' = (6x^2 + 2) / s^3
        let a = -2.0 * x / (s * s);
        let da = (6.0 * x * x + 2.0) / (s * s * s);
        bump(x) * (a * a + da)
    } else {
        0.0
    }
}

/// `int_{-1}^{1} e^{1/(x^2-1)} dx`, by trapezoid quadrature. The integrand
/// is flat to all orders at the endpoints, so the rule converges faster
/// than any power of the node count.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let n = 20_000;
        let h = 2.0 / n as f64;
        h * (1..n).map(|i| bump(-1.0 + i as f64 * h)).sum::<f64>()
    })
}

/// Samples of `phi_eps(x) = phi(x/eps) / (eps * mass)` on a grid, centred
/// at `x = 0` and renormalised so that `h * sum = 1`.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    width: f64,
    samples: GridFunction,
}

impl MollifierKernel {
    pub fn new(width: f64, grid: Grid) -> Result<Self> {
        let h = grid.spacing();
        if !(width.is_finite() && width > 2.0 * h) {
            return Err(Error::UnderResolvedKernel { width, spacing: h });
        }
        if width >= 0.5 * grid.length() {
            return Err(Error::Config(format!(
                "mollifier width {width} must be below half the period {}",
                0.5 * grid.length()
            )));
        }
        let norm = 1.0 / (width * bump_mass());
        let raw = GridFunction::from_fn(grid, |x| norm * bump(x / width))?;
        let mass = raw.integral();
        let samples = raw.scale(1.0 / mass);
        Ok(MollifierKernel { width, samples })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }

    /// Periodic discrete convolution `h * sum_j k[i - j] f[j]`.
    pub fn mollify(&self, f: &GridFunction) -> Result<GridFunction> {
        let grid = *self.samples.grid();
        grid.ensure_same(f.grid())?;
        let n = grid.cells();
        let h = grid.spacing();
        let center = n / 2;
        let k = self.samples.values();
        // offsets m with k(m h) != 0
        let taps: Vec<(usize, f64)> = (0..n)
            .filter(|&i| k[i] != 0.0)
            .map(|i| ((i + n - center) % n, h * k[i]))
            .collect();
        let fv = f.values();
        let out = (0..n)
            .map(|i| {
                taps.iter()
                    .map(|&(m, w)| w * fv[(i + n - m) % n])
                    .sum::<f64>()
            })
            .collect();
        Ok(GridFunction::from_raw(grid, out))
    }
}

pub fn mollifier_kernel(width: f64, grid: Grid) -> Result<MollifierKernel> {
    MollifierKernel::new(width, grid)
}

pub fn mollify(u0: &GridFunction, kernel: &MollifierKernel) -> Result<GridFunction> {
    kernel.mollify(u0)
}

/// `c e^{-|x - x0|}` with the periodic distance.
pub fn ic_peakon(c: f64, x0: f64, grid: Grid) -> Result<GridFunction> {
    if !(c.is_finite() && c != 0.0) {
        return Err(Error::Config(format!(
            "peakon amplitude must be nonzero, got {c}"
        )));
    }
    GridFunction::from_fn(grid, |x| c * (-grid.periodic_offset(x, x0).abs()).exp())
}

/// `a e^{-x^2 / (2 s^2)}`.
pub fn ic_gaussian(a: f64, s: f64, grid: Grid) -> Result<GridFunction> {
    if !(s.is_finite() && s > 2.0 * grid.spacing()) {
        return Err(Error::Config(format!(
            "gaussian width {s} must exceed 2h = {}",
            2.0 * grid.spacing()
        )));
    }
    GridFunction::from_fn(grid, |x| a * (-x * x / (2.0 * s * s)).exp())
}

pub fn ic_from_csv(path: &Path, grid: Grid) -> Result<GridFunction> {
    GridFunction::load_csv(path, grid)
}

/// Norms of the unmollified data that the a-priori bounds are stated in.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InitialNorms {
    /// `||u0'||_{L^1}`
    pub slope_l1: f64,
    /// `||u0'||_{BV}`
    pub slope_bv: f64,
    /// `||u0||_{H^1}`
    pub h1: f64,
}

impl InitialNorms {
    pub fn of(u0: &GridFunction) -> Self {
        let q = u0.derivative();
        InitialNorms {
            slope_l1: q.norm_l1(),
            slope_bv: q.seminorm_bv(),
            h1: u0.norm_h1(),
        }
    }

    pub fn h1_squared(&self) -> f64 {
        self.h1 * self.h1
    }
}
