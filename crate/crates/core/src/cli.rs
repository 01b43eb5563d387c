//! `gch run | sweep | certify | selftest`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or input
//! error, 3 blow-up.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{Coupling, ExperimentConfig, MollifyWidth};
use crate::entropy::{certify, TestFunction};
use crate::error::{Error, Result};
use crate::estimates::check_named;
use crate::initialdata::InitialNorms;
use crate::io::{fmt17, sha256_file, write_json};
use crate::solver::{Formulation, Solver};
use crate::sweep::{cauchy_table, run_sweep, write_cauchy_csv};
use crate::trajectory::Trajectory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Environment variable capping sweep concurrency (`0` = sequential).
pub const THREADS_ENV: &str = "GCH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gch",
    version,
    about = "Vanishing-viscosity laboratory for a generalized Camassa-Holm equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one viscous problem and check the a-priori bounds.
    Run(CommonArgs),
    /// Run a viscosity ladder and tabulate consecutive differences.
    Sweep(CommonArgs),
    /// Weak-form and entropy residuals of a stored trajectory.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding `manifest.json` and snapshot CSVs.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Fast smoke suite of exact identities.
    Selftest,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "gch-out")]
    pub out: PathBuf,
    /// Use eta'(u0) instead of eta(u0) in the entropy initial term.
    #[arg(long)]
    pub paper_literal: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
}

/// Written last into the output directory. Everything except
/// `wall_clock_seconds` is reproducible byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<ExperimentConfig>,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<OutputEntry>,
    pub wall_clock_seconds: f64,
    pub passed: bool,
    pub summary: Vec<CheckSummary>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

struct Session {
    root: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Session {
    fn new(command: &str, root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Session {
            root: root.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                config: None,
                input_hashes: BTreeMap::new(),
                outputs: Vec::new(),
                wall_clock_seconds: 0.0,
                passed: true,
                summary: Vec::new(),
                exit_code: EXIT_OK,
                warnings: Vec::new(),
            },
            started: Instant::now(),
        })
    }

    fn hash_input(&mut self, label: &str, path: &Path) -> Result<()> {
        self.manifest
            .input_hashes
            .insert(label.to_string(), sha256_file(path)?);
        Ok(())
    }

    fn record(&mut self, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        self.manifest.outputs.push(OutputEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn check(&mut self, name: &str, passed: bool) {
        println!("{name}: {}", if passed { "pass" } else { "FAIL" });
        self.manifest.summary.push(CheckSummary {
            name: name.to_string(),
            passed,
        });
        self.manifest.passed &= passed;
    }

    fn finish(mut self, exit_code: i32) -> Result<i32> {
        self.manifest.exit_code = exit_code;
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        write_json(&self.root.join("run_manifest.json"), &self.manifest)?;
        Ok(exit_code)
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::NonFinite { .. } => EXIT_BLOWUP,
        _ => EXIT_CONFIG,
    }
}

fn load_config(args: &CommonArgs) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let mut cfg = match &args.config {
        Some(p) => {
            if !p.exists() {
                return Err(Error::Config(format!(
                    "config file not found: {}",
                    p.display()
                )));
            }
            ExperimentConfig::load(p)?
        }
        None => ExperimentConfig::from_json(r#"{"solver.t_final": 1.0}"#)?,
    };
    if args.paper_literal {
        cfg.paper_literal = true;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok((cfg, args.config.clone()))
}

fn require_config(args: &CommonArgs, command: &str) -> Result<()> {
    if args.config.is_none() {
        return Err(Error::Config(format!(
            "`gch {command}` needs --config PATH"
        )));
    }
    Ok(())
}

pub fn cmd_run(args: &CommonArgs) -> Result<i32> {
    require_config(args, "run")?;
    let (cfg, path) = load_config(args)?;
    let eps = cfg.epsilon()?;
    let solver_cfg = cfg.solver_config(eps)?;
    let checks = cfg.checks()?;
    let raw = cfg.raw_initial()?;
    let norms = InitialNorms::of(&raw);
    let u0 = cfg.mollify(&raw, eps)?;

    let mut s = Session::new("run", &args.out)?;
    if let Some(p) = &path {
        s.hash_input("config", p)?;
    }
    if let Some(p) = cfg.input_path() {
        s.hash_input("initial_data", &p)?;
    }
    s.manifest.config = Some(cfg.clone());

    let traj = match Solver::new(*u0.grid()).run(&u0, &solver_cfg) {
        Ok(t) => t,
        Err(e @ Error::BlowUp { .. }) => {
            eprintln!("gch run: {e}");
            s.manifest.passed = false;
            s.manifest.warnings.push(e.to_string());
            return s.finish(EXIT_BLOWUP);
        }
        Err(e) => return Err(e),
    };
    for p in traj.save(&args.out.join("trajectory"))? {
        s.record(&p)?;
    }

    if traj.formulation() == Formulation::W {
        s.manifest
            .warnings
            .push("bounds are stated for u; skipped for a W_FORM run".into());
    } else {
        let dir = args.out.join("reports");
        std::fs::create_dir_all(&dir)?;
        for name in checks.iter().filter(|c| *c != "entropy") {
            let r = check_named(name, &traj, &norms)?;
            let (j, c) = (
                dir.join(format!("{name}.json")),
                dir.join(format!("{name}.csv")),
            );
            r.write_json(&j)?;
            r.write_csv(&c)?;
            s.record(&j)?;
            s.record(&c)?;
            s.check(name, r.passed);
        }
        if checks.iter().any(|c| c == "entropy") {
            let phis = TestFunction::seeded_family(cfg.seed, cfg.bumps, traj.t_final());
            let rep = certify(
                &traj,
                &cfg.pairs()?,
                &phis,
                cfg.tolerances(),
                cfg.paper_literal,
            )?;
            let p = args.out.join("certification.json");
            rep.write_json(&p)?;
            s.record(&p)?;
            s.check("entropy", rep.passed);
        }
    }
    let code = if s.manifest.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    s.finish(code)
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a nonnegative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(None),
    }
}

pub fn cmd_sweep(args: &CommonArgs) -> Result<i32> {
    require_config(args, "sweep")?;
    let (cfg, path) = load_config(args)?;
    if cfg.mollify_width == MollifyWidth::Named(Coupling::Coupled) {
        return Err(Error::Config(
            "sweeps share one mollified initial field; set ic.mollify_width to a length".into(),
        ));
    }
    let mut sweep_cfg = cfg.sweep_config()?;
    sweep_cfg.threads = threads_from_env()?;
    let raw = cfg.raw_initial()?;
    let norms = InitialNorms::of(&raw);
    let u0 = cfg.mollify(&raw, 0.0)?;

    let mut s = Session::new("sweep", &args.out)?;
    if let Some(p) = &path {
        s.hash_input("config", p)?;
    }
    if let Some(p) = cfg.input_path() {
        s.hash_input("initial_data", &p)?;
    }
    s.manifest.config = Some(cfg.clone());

    let out = run_sweep(&u0, &norms, &sweep_cfg)?;
    for (k, t) in out.trajectories.iter().enumerate() {
        let dir = args
            .out
            .join("runs")
            .join(format!("eps_{k}_{}", fmt17(t.epsilon())));
        for p in t.save(&dir)? {
            s.record(&p)?;
        }
    }
    let report = &out.report;
    for w in &report.warnings {
        eprintln!("gch sweep: warning: {w}");
    }
    s.manifest.warnings.extend(report.warnings.iter().cloned());
    let rp = args.out.join("sweep.json");
    report.write_json(&rp)?;
    s.record(&rp)?;
    if !report.complete {
        for r in report.runs.iter().filter(|r| !r.completed) {
            eprintln!(
                "gch sweep: eps = {}: {}",
                r.epsilon,
                r.error.as_deref().unwrap_or("failed")
            );
        }
        s.manifest.passed = false;
        return s.finish(EXIT_BLOWUP);
    }
    let rows = cauchy_table(report);
    let cp = args.out.join("cauchy.csv");
    write_cauchy_csv(&rows, &cp)?;
    s.record(&cp)?;
    for r in &rows {
        println!(
            "eps {:.3e}  d {:.6e}  d' {:.6e}  ratio {}",
            r.epsilon,
            r.d,
            r.d_prime,
            r.ratio
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into())
        );
    }
    let scale = out
        .trajectories
        .first()
        .map(|t| t.initial().norm_h1())
        .unwrap_or(1.0);
    s.check("cauchy_monotone", report.is_monotone(scale.max(1.0)));
    if let Some(c) = &report.certification {
        for (name, p) in &c.bounds {
            s.check(&format!("smallest_eps.{name}"), *p);
        }
        s.check("smallest_eps.entropy", c.entropy_passed);
    }
    let code = if s.manifest.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    s.finish(code)
}

pub fn cmd_certify(args: &CommonArgs, trajectory: &Path) -> Result<i32> {
    let (cfg, path) = load_config(args)?;
    let traj = Trajectory::load(trajectory)?;
    let mut s = Session::new("certify", &args.out)?;
    if let Some(p) = &path {
        s.hash_input("config", p)?;
    }
    s.hash_input(
        "trajectory_manifest",
        &trajectory.join(crate::trajectory::MANIFEST_NAME),
    )?;
    let phis = TestFunction::seeded_family(cfg.seed, cfg.bumps, traj.t_final());
    let rep = certify(
        &traj,
        &cfg.pairs()?,
        &phis,
        cfg.tolerances(),
        cfg.paper_literal,
    )?;
    s.manifest.warnings.extend(rep.warnings.iter().cloned());
    s.manifest.config = Some(cfg);
    let p = args.out.join("certification.json");
    rep.write_json(&p)?;
    s.record(&p)?;
    s.check("entropy", rep.passed);
    let code = if rep.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    s.finish(code)
}

pub fn cmd_selftest() -> i32 {
    let report = crate::selftest::run_all();
    for c in &report {
        match &c.outcome {
            Ok(()) => println!("ok   {}", c.name),
            Err(m) => println!("FAIL {}: {m}", c.name),
        }
    }
    let failed = report.iter().filter(|c| c.outcome.is_err()).count();
    println!("{} examples, {failed} failed", report.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Certify { common, trajectory } => cmd_certify(common, trajectory),
        Command::Selftest => Ok(cmd_selftest()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gch: {e}");
            exit_code_for(&e)
        }
    }
}
