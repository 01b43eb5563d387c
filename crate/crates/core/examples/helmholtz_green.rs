// The periodic Helmholtz inverse: G*f solves (1 - D2) v = f.

use gch_core::{Grid, GridFunction, HelmholtzSolver, Result};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 1024)?;
    let hs = HelmholtzSolver::new(grid);

    let f = GridFunction::from_fn(grid, |x| {
        (-x * x).exp() + 0.25 * (x * std::f64::consts::PI / 10.0).sin()
    })?;
    let v = hs.green_convolve(&f)?;

    // residual of the discrete operator
    let back = hs.apply(&v);
    println!("max |(1 - D2) G*f - f| = {:.3e}", back.sub(&f).norm_linf());

    // G*1 = 1 and the derivative forms commute with D
    let one = GridFunction::constant(grid, 1.0)?;
    println!(
        "max |G*1 - 1|          = {:.3e}",
        hs.green_convolve(&one)?.sub(&one).norm_linf()
    );
    let comm = hs.green_dx(&f)?.sub(&v.derivative()).norm_linf();
    println!("max |G_x f - D(G*f)|   = {comm:.3e}");
    let dxx = hs.green_dxx(&f)?.sub(&v.sub(&f)).norm_linf();
    println!("max |G_xx f - (G*f - f)| = {dxx:.3e}");
    Ok(())
}
