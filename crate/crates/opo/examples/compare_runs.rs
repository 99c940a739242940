//! Two independent ensembles compared with each other and with theory.

use opo::harness::output::RunOutcome;
use opo::harness::{compare_runs, compare_with_theory, run_ensemble, ExecOptions, RunConfig, Tolerances};

fn run(seed: u64, name: &str) -> anyhow::Result<std::path::PathBuf> {
    let mut c = RunConfig::rotating_default(400, seed);
    c.detection.omega_points = 9;
    c.output.dir = std::env::temp_dir().join(name);
    c.output.checkpoint = false;
    let RunOutcome::Finished(_) = run_ensemble(&c, &ExecOptions::default())? else { unreachable!() };
    Ok(c.output.dir)
}

fn main() -> anyhow::Result<()> {
    let a = run(1, "opo-example-a")?;
    let b = run(2, "opo-example-b")?;
    let tol = Tolerances::default();
    print!("{}", compare_runs(&a, &b, &tol)?.to_text());
    print!("{}", compare_with_theory(&a, &tol, Default::default())?.to_text());
    Ok(())
}
