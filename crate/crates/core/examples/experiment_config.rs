// Drive a run from the flat JSON configuration format.

use gch_core::config::ExperimentConfig;
use gch_core::estimates::check_named;
use gch_core::{InitialNorms, Result, Solver};

const CONFIG: &str = r#"{
    "grid.L": 40.0,
    "grid.N": 512,
    "solver.epsilon": 0.02,
    "solver.t_final": 0.5,
    "ic.kind": "gaussian",
    "ic.params": {"a": 0.4, "s": 1.5},
    "checks.enabled": ["h1", "linf"]
}"#;

fn main() -> Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let eps = cfg.epsilon()?;
    let raw = cfg.raw_initial()?;
    let u0 = cfg.mollify(&raw, eps)?;
    let traj = Solver::new(cfg.grid()?).run(&u0, &cfg.solver_config(eps)?)?;

    let norms = InitialNorms::of(&raw);
    for name in cfg.checks()? {
        let r = check_named(&name, &traj, &norms)?;
        println!("{name}: {}", if r.passed { "pass" } else { "FAIL" });
    }

    // invalid configurations are rejected with a message
    let bad = ExperimentConfig::from_json(r#"{"solver.t_final": 1.0, "grid.M": 3}"#);
    println!(
        "unknown key -> {}",
        bad.err().map(|e| e.to_string()).unwrap_or_default()
    );
    Ok(())
}
