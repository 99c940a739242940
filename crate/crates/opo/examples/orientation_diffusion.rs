//! Ensemble simulation in the rotating frame: orientation diffusion and dark-mode squeezing.
//!
//! `cargo run --release --example orientation_diffusion -- [trajectories]`

use opo::harness::output::RunOutcome;
use opo::harness::{compare_with_theory, run_ensemble, ExecOptions, RunConfig, Tolerances};

fn main() -> anyhow::Result<()> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let dir = std::env::temp_dir().join("opo-example-rotating");
    let mut c = RunConfig::rotating_default(n, 2024);
    c.output.dir = dir.clone();
    c.output.checkpoint = false;
    let RunOutcome::Finished(m) = run_ensemble(&c, &ExecOptions::default())? else { unreachable!() };

    let s = m.results.theta_slope.expect("slope");
    println!("V_theta/D slope {:.4} +- {:.4} (R^2 {:.5})", s.fit.slope, s.slope_stderr, s.fit.r2);
    let f = m.results.fit.expect("fit");
    println!("Y_d spectrum fit a = {:.4} +- {:.4}, b = {:.4} +- {:.4}", f.a, f.a_err, f.b, f.b_err);
    let rep = compare_with_theory(&dir, &Tolerances::default(), Default::default())?;
    for prefix in ["V_theta", "Stationary phi=0 ", "Stationary phi=90 ", "fit"] {
        let group: Vec<_> = rep.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
        let failed = group.iter().filter(|c| !c.pass).count();
        println!("{:<18} {failed} of {} checks outside tolerance", prefix.trim(), group.len());
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
