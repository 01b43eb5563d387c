// Save a trajectory, load it back and certify the stored copy.

use gch_core::entropy::{certify, pair_quadratic, TestFunction, Tolerances};
use gch_core::initialdata::ic_gaussian;
use gch_core::io::sha256_file;
use gch_core::{Grid, Result, Solver, SolverConfig, Trajectory};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 512)?;
    let u0 = ic_gaussian(0.3, 2.0, grid)?;
    let traj = Solver::new(grid).run(&u0, &SolverConfig::new(0.02, 0.5))?;

    let dir = std::env::temp_dir().join(format!("gch-trajectory-io-{}", std::process::id()));
    let written = traj.save(&dir)?;
    let manifest = written.last().expect("manifest is written last");
    println!(
        "{} files, manifest sha256 {}",
        written.len(),
        sha256_file(manifest)?
    );

    let back = Trajectory::load(&dir)?;
    let identical = back
        .snapshots()
        .iter()
        .zip(traj.snapshots())
        .all(|(a, b)| a.values() == b.values());
    println!(
        "reloaded {} snapshots, bit-identical: {identical}",
        back.len()
    );

    let phis = TestFunction::seeded_family(7, 3, back.t_final());
    let rep = certify(
        &back,
        &[pair_quadratic()],
        &phis,
        Tolerances::default(),
        false,
    )?;
    println!("stored copy certified: {}", rep.passed);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
