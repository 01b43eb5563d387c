// One viscous run of the mollified peakon with the energy ledger.

use gch_core::initialdata::{ic_peakon, mollifier_kernel};
use gch_core::solver::energy;
use gch_core::{Grid, Result, SnapshotSchedule, Solver, SolverConfig};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 1024)?;
    let u0 = mollifier_kernel(1.0, grid)?.mollify(&ic_peakon(0.5, 0.0, grid)?)?;

    let cfg = SolverConfig::new(0.01, 1.0).with_snapshots(SnapshotSchedule::Interval(0.1));
    let traj = Solver::new(grid).run(&u0, &cfg)?;
    let diss = traj.dissipation().expect("U_FORM runs record dissipation");

    let e0 = energy(traj.initial());
    println!("{} steps, {} snapshots", traj.stats().len(), traj.len());
    println!("    t        E(t)         E(0) - 2 eps int D    peak at");
    for (k, (t, u)) in traj.times().iter().zip(traj.snapshots()).enumerate() {
        let imax = u
            .values()
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > u.values()[b] { i } else { b });
        println!(
            "{t:5.2}  {:.10}  {:.10}   {:+.3}",
            energy(u),
            e0 - 2.0 * traj.epsilon() * diss[k],
            grid.node(imax)
        );
    }
    Ok(())
}
