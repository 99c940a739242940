//! Split an ensemble into shards, resume from checkpoints, and replay it from its manifest.

use opo::harness::output::RunOutcome;
use opo::harness::{replay_manifest, run_ensemble, ExecOptions, RunConfig, Shard};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("opo-example-sharded");
    let _ = std::fs::remove_dir_all(&dir);
    let mut c = RunConfig::fixed_default(200, 7);
    c.output.dir = dir.clone();
    for i in 0..3 {
        let opts = ExecOptions { shard: Some(Shard::parse(&format!("{i}/3"))?), ..Default::default() };
        if let RunOutcome::Partial { done, total } = run_ensemble(&c, &opts)? {
            println!("after shard {i}/3: {done} of {total} blocks");
        }
    }
    let RunOutcome::Finished(m) = run_ensemble(&c, &ExecOptions::default())? else { unreachable!() };
    println!("finalized from checkpoints: {} trajectories", m.results.completed);
    for f in &m.outputs {
        println!("  {} {}", f.name, &f.sha256[..16]);
    }
    let r = replay_manifest(&dir, Some(dir.join("replay")), &ExecOptions { workers: Some(4), ..Default::default() })?;
    println!("replay with 4 workers: {} files, digests identical", r.outputs.len());
    Ok(())
}
