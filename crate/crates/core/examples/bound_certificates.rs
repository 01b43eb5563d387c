// The six a-priori bound checks on a viscous peakon run.

use gch_core::estimates::check_all;
use gch_core::initialdata::{ic_peakon, mollifier_kernel};
use gch_core::{Grid, InitialNorms, Result, Solver, SolverConfig};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 1024)?;
    let raw = ic_peakon(0.5, 0.0, grid)?;
    // bounds use the norms of the unmollified data
    let norms = InitialNorms::of(&raw);
    let u0 = mollifier_kernel(1.0, grid)?.mollify(&raw)?;
    let traj = Solver::new(grid).run(&u0, &SolverConfig::new(0.01, 1.0))?;

    for r in check_all(&traj, &norms)? {
        println!(
            "{:<10} {}  tightest relative slack {:.3e}{}",
            r.bound_name,
            if r.passed { "pass" } else { "FAIL" },
            0.0 - r.worst_relative_margin(),
            r.relative_defect()
                .map(|d| format!("  energy defect {d:.2e}"))
                .unwrap_or_default()
        );
    }
    Ok(())
}
