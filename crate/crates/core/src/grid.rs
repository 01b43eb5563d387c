//! Uniform periodic mesh, sampled fields, and the discrete operators and
//! norms everything else is stated in.
//!
//! Nodes sit at `x_i = -L/2 + i h` with `h = L / N`. All stencils wrap
//! periodically, so the central difference is exactly skew-adjoint and
//! summation by parts holds without boundary terms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt17;

/// Smallest admissible cell count.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "L")]
    length: f64,
    #[serde(rename = "N")]
    cells: usize,
}

impl Grid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period length must be positive and finite, got {length}"
            )));
        }
        if cells < MIN_CELLS || !cells.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cell count must be even and at least {MIN_CELLS}, got {cells}"
            )));
        }
        Ok(Grid { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(move |i| self.node(i))
    }

    /// Signed periodic offset `x - center`, wrapped into `[-L/2, L/2)`.
    pub fn periodic_offset(&self, x: f64, center: f64) -> f64 {
        let l = self.length;
        let mut d = (x - center) % l;
        if d < -0.5 * l {
            d += l;
        } else if d >= 0.5 * l {
            d -= l;
        }
        d
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_length: self.length,
                expected_cells: self.cells,
                found_length: other.length,
                found_cells: other.cells,
            })
        }
    }
}

/// A real field sampled at the nodes of a [`Grid`].
///
/// Values are fixed at construction. Constructors that take external data
/// reject NaN and infinities; the solver re-checks every step.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.cells(),
                values.len()
            )));
        }
        let f = GridFunction { grid, values };
        f.check_finite("grid function")?;
        Ok(f)
    }

    /// Builds a field without the finiteness scan. Callers inside the crate
    /// use this on arithmetic results and validate at step boundaries.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        GridFunction { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(grid, grid.nodes().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction::from_raw(grid, vec![0.0; grid.cells()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        GridFunction::new(grid, vec![c; grid.cells()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { context, index }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the grids differ; use [`Grid::ensure_same`] at API
    /// boundaries where the mismatch is a user error.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.grid, other.grid, "zip_map on mismatched grids");
        GridFunction::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn square(&self) -> GridFunction {
        self.map(|v| v * v)
    }

    /// Second-order central difference `(f[i+1] - f[i-1]) / 2h`.
    pub fn derivative(&self) -> GridFunction {
        let n = self.len();
        let inv = 0.5 / self.grid.spacing();
        let f = &self.values;
        let out = (0..n)
            .map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) * inv)
            .collect();
        GridFunction::from_raw(self.grid, out)
    }

    /// Forward difference `(f[i+1] - f[i]) / h`.
    pub fn forward_difference(&self) -> GridFunction {
        let n = self.len();
        let inv = 1.0 / self.grid.spacing();
        let f = &self.values;
        let out = (0..n).map(|i| (f[(i + 1) % n] - f[i]) * inv).collect();
        GridFunction::from_raw(self.grid, out)
    }

    /// Compact second difference `(f[i-1] - 2 f[i] + f[i+1]) / h^2`.
    pub fn second_difference(&self) -> GridFunction {
        let n = self.len();
        let h = self.grid.spacing();
        let inv = 1.0 / (h * h);
        let f = &self.values;
        let out = (0..n)
            .map(|i| (f[(i + n - 1) % n] - 2.0 * f[i] + f[(i + 1) % n]) * inv)
            .collect();
        GridFunction::from_raw(self.grid, out)
    }

    /// `h * sum(f)`.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// `h * sum(f * g)`.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product on mismatched grids");
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn norm_l1(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_h1(&self) -> f64 {
        let a = self.norm_l2();
        let b = self.derivative().norm_l2();
        (a * a + b * b).sqrt()
    }

    /// Discrete total variation of the periodic sample sequence (no `h`).
    pub fn seminorm_bv(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| (self.values[(i + 1) % n] - self.values[i]).abs())
            .sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([fmt17(self.grid.node(i)), fmt17(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses an `x,value` CSV and checks that every row sits on the
    /// corresponding node of `grid` (coordinate tolerance `1e-12`).
    pub fn read_csv<R: Read>(reader: R, grid: Grid, path: Option<&Path>) -> Result<Self> {
        const NODE_TOL: f64 = 1e-12;
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::malformed(path, "expected header `x,value`"));
        }
        let mut values = Vec::with_capacity(grid.cells());
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::malformed(
                    path,
                    format!("row {i} has {} fields", record.len()),
                ));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::malformed(path, format!("row {i}: {e}")))
            };
            let x = parse(&record[0])?;
            let v = parse(&record[1])?;
            if i >= grid.cells() {
                return Err(Error::malformed(
                    path,
                    format!("more than {} rows", grid.cells()),
                ));
            }
            if (x - grid.node(i)).abs() > NODE_TOL {
                return Err(Error::malformed(
                    path,
                    format!("row {i}: x = {x} does not match node {}", grid.node(i)),
                ));
            }
            values.push(v);
        }
        if values.len() != grid.cells() {
            return Err(Error::malformed(
                path,
                format!("expected {} rows, found {}", grid.cells(), values.len()),
            ));
        }
        GridFunction::new(grid, values)
    }

    pub fn load_csv(path: &Path, grid: Grid) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        GridFunction::read_csv(std::io::BufReader::new(file), grid, Some(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> Grid {
        Grid::new(l, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(40.0, 15).is_err());
        assert!(Grid::new(40.0, 8).is_err());
        assert!(Grid::new(0.0, 64).is_err());
        assert!(Grid::new(f64::NAN, 64).is_err());
        let g = grid(40.0, 64);
        assert_relative_eq!(g.spacing() * 64.0, 40.0, max_relative = 1e-15);
        assert_eq!(g.node(32), 0.0);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = grid(2.0 * PI, 16);
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(
            GridFunction::new(g, v),
            Err(Error::NonFinite { index: 3, .. })
        ));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = GridFunction::constant(grid(40.0, 128), 3.0).unwrap();
        assert!(f.derivative().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_of_sine_is_second_order() {
        // Analytic oracle: d/dx sin(x) = cos(x); the central stencil has
        // symbol sin(kh)/h, so the max error is 1 - sin(h)/h ~ h^2 / 6.
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let g = grid(2.0 * PI, n);
            let f = GridFunction::from_fn(g, f64::sin).unwrap();
            let d = f.derivative();
            let err = g
                .nodes()
                .zip(d.values())
                .map(|(x, v)| (v - x.cos()).abs())
                .fold(0.0, f64::max);
            let h = g.spacing();
            assert_relative_eq!(err, 1.0 - h.sin() / h, max_relative = 1e-6);
            errs.push(err);
        }
        assert!(errs[0] < 1.7e-3);
        assert!(errs[0] / errs[1] > 3.9 && errs[1] / errs[2] > 3.9);
    }

    #[test]
    fn sawtooth_derivative_carries_jump_at_wrap() {
        // f = x on [-L/2, L/2): interior slope 1; the two wrap nodes see the
        // jump of size L across 2h, i.e. 1 - L/(2h) = 1 - N/2.
        let g = grid(16.0, 16);
        let f = GridFunction::from_fn(g, |x| x).unwrap();
        let d = f.derivative();
        for i in 1..15 {
            assert_relative_eq!(d.values()[i], 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(d.values()[0], 1.0 - 8.0, max_relative = 1e-14);
        assert_relative_eq!(d.values()[15], 1.0 - 8.0, max_relative = 1e-14);
        // total variation: 15 unit steps up, one drop of 15
        assert_relative_eq!(f.seminorm_bv(), 30.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_field_norms() {
        let f = GridFunction::zeros(grid(40.0, 64));
        assert_eq!(f.norm_l1(), 0.0);
        assert_eq!(f.norm_l2(), 0.0);
        assert_eq!(f.norm_linf(), 0.0);
        assert_eq!(f.norm_h1(), 0.0);
        assert_eq!(f.seminorm_bv(), 0.0);
    }

    #[test]
    fn discrete_delta_has_unit_mass() {
        let g = grid(40.0, 256);
        let mut v = vec![0.0; 256];
        v[17] = 1.0 / g.spacing();
        let f = GridFunction::new(g, v).unwrap();
        assert_relative_eq!(f.norm_l1(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn peakon_norms_match_closed_forms() {
        // int e^{-2|x|} dx = 1, int (e^{-|x|})'^2 dx = 1
        let g = grid(40.0, 4096);
        let f = GridFunction::from_fn(g, |x| (-x.abs()).exp()).unwrap();
        assert_relative_eq!(f.norm_l2().powi(2), 1.0, max_relative = 1e-3);
        // the central stencil flattens the crest cell: O(h) slope defect
        assert_relative_eq!(f.norm_h1(), 2f64.sqrt(), max_relative = 5e-3);
        // slope -sgn(x) e^{-|x|}: jump 2 at the crest plus 1 on either side
        assert_relative_eq!(f.derivative().seminorm_bv(), 4.0, max_relative = 2e-2);
    }

    #[test]
    fn constant_h1_norm_uses_torus_convention() {
        let g = grid(40.0, 64);
        let f = GridFunction::constant(g, 2.5).unwrap();
        assert_relative_eq!(f.norm_h1(), 2.5 * 40f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn spike_variation_is_twice_height() {
        let g = grid(40.0, 64);
        let mut v = vec![1.0; 64];
        v[10] = 1.75;
        let f = GridFunction::new(g, v).unwrap();
        assert_relative_eq!(f.seminorm_bv(), 1.5, max_relative = 1e-14);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = grid(40.0, 32);
        let f = GridFunction::from_fn(g, |x| (0.3 * x).sin() / 7.0 + 1e-300).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        let back = GridFunction::read_csv(&buf[..], g, None).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_off_grid_rows() {
        let g = grid(40.0, 16);
        let mut text = String::from("x,value\n");
        for i in 0..16 {
            let x = g.node(i) + if i == 5 { 1e-9 } else { 0.0 };
            text.push_str(&format!("{},{}\n", fmt17(x), 1.0));
        }
        assert!(matches!(
            GridFunction::read_csv(text.as_bytes(), g, None),
            Err(Error::Malformed { .. })
        ));
        let short = "x,value\n-20,1\n";
        assert!(GridFunction::read_csv(short.as_bytes(), g, None).is_err());
        let bad_header = "position,value\n";
        assert!(GridFunction::read_csv(bad_header.as_bytes(), g, None).is_err());
    }

    fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn derivative_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, f in field(64), g in field(64)) {
            let gr = grid(40.0, 64);
            let f = GridFunction::new(gr, f).unwrap();
            let g = GridFunction::new(gr, g).unwrap();
            let lhs = f.scale(a).add(&g.scale(b)).derivative();
            let rhs = f.derivative().scale(a).add(&g.derivative().scale(b));
            let scale = 1.0 + lhs.norm_linf();
            prop_assert!(lhs.sub(&rhs).norm_linf() <= 1e-13 * scale);
        }

        #[test]
        fn summation_by_parts(f in field(128), g in field(128)) {
            let gr = grid(40.0, 128);
            let f = GridFunction::new(gr, f).unwrap();
            let g = GridFunction::new(gr, g).unwrap();
            let lhs = f.inner(&g.derivative());
            let rhs = -f.derivative().inner(&g);
            let scale = 1.0 + f.norm_l2() * g.derivative().norm_l2();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }

        #[test]
        fn h1_norm_is_pythagorean(f in field(64)) {
            let f = GridFunction::new(grid(40.0, 64), f).unwrap();
            let a = f.norm_l2();
            let b = f.derivative().norm_l2();
            prop_assert_eq!(f.norm_h1(), (a * a + b * b).sqrt());
        }

        #[test]
        fn variation_vanishes_only_for_constants(f in field(32), c in -5.0..5.0f64) {
            let gr = grid(40.0, 32);
            let f = GridFunction::new(gr, f).unwrap();
            prop_assert!(f.seminorm_bv() >= 0.0);
            let distinct = f.values().windows(2).any(|w| w[0] != w[1]);
            prop_assert_eq!(f.seminorm_bv() > 0.0, distinct);
            prop_assert_eq!(GridFunction::constant(gr, c).unwrap().seminorm_bv(), 0.0);
        }
    }
}
