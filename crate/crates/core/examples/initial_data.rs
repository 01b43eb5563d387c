// Peakon initial data, its mollification and the norms the bounds use.

use gch_core::initialdata::{ic_gaussian, ic_peakon, mollifier_kernel};
use gch_core::{Grid, InitialNorms, Result};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 2048)?;
    let raw = ic_peakon(1.0, 0.0, grid)?;
    let kernel = mollifier_kernel(1.0, grid)?;
    let smooth = kernel.mollify(&raw)?;

    let n_raw = InitialNorms::of(&raw);
    let n_smooth = InitialNorms::of(&smooth);
    println!("kernel mass h*sum = {:.15}", kernel.samples().integral());
    println!("               raw        mollified");
    println!(
        "|u0'|_L1    {:>10.6} {:>12.6}",
        n_raw.slope_l1, n_smooth.slope_l1
    );
    println!(
        "|u0'|_BV    {:>10.6} {:>12.6}",
        n_raw.slope_bv, n_smooth.slope_bv
    );
    println!("|u0|_H1     {:>10.6} {:>12.6}", n_raw.h1, n_smooth.h1);
    println!(
        "peak value  {:>10.6} {:>12.6}",
        raw.norm_linf(),
        smooth.norm_linf()
    );

    let g = ic_gaussian(0.5, 2.0, grid)?;
    println!("gaussian a = 0.5, s = 2: H1 = {:.6}", g.norm_h1());
    Ok(())
}
