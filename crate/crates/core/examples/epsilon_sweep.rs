// A short viscosity ladder and its Cauchy table.

use gch_core::initialdata::{ic_peakon, mollifier_kernel};
use gch_core::sweep::{cauchy_table, run_sweep, SweepConfig};
use gch_core::{Grid, InitialNorms, Result, SolverConfig};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 1024)?;
    let raw = ic_peakon(0.5, 0.0, grid)?;
    let u0 = mollifier_kernel(1.0, grid)?.mollify(&raw)?;

    let cfg = SweepConfig::new(vec![0.08, 0.04, 0.02], SolverConfig::new(0.0, 0.5));
    let out = run_sweep(&u0, &InitialNorms::of(&raw), &cfg)?;
    for w in &out.report.warnings {
        println!("warning: {w}");
    }
    println!("  eps        d            d'          d ratio");
    for r in cauchy_table(&out.report) {
        let ratio = r
            .ratio
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        println!("{:.3}  {:.6e}  {:.6e}  {ratio}", r.epsilon, r.d, r.d_prime);
    }
    Ok(())
}
