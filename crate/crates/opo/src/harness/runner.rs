use super::config::RunConfig;
use crate::analytics::DetectionMode;
use crate::classical::steady_state;
use crate::error::{OpoError, Result};
use crate::observables::{dark_quadrature_at, extract_theta, MomentSums, StationarySums, ThetaUnwrapper, WindowSums, WindowTable};
use crate::params::DimensionlessParams;
use crate::sde::{
    integrate_trajectory, trajectory_rng, AdiabaticModel, FieldState, FullModel, IntegratorConfig, Model, ReducedModel, Signal,
    SystemKind, TrajectoryStatus,
};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

type C = Complex64;

/// Contiguous range of trajectory indices processed and checkpointed as a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub index: usize,
    pub first: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergedTrajectory {
    pub trajectory: u64,
    pub step: u64,
}

/// Summed observables of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub spec: BlockSpec,
    pub completed: u64,
    pub diverged: Vec<DivergedTrajectory>,
    pub branch_cut_steps: u64,
    pub suspect_jumps: u64,
    /// Largest conjugate asymmetry of a final state.
    pub max_conjugate_asymmetry: f64,
    pub theta: MomentSums,
    /// Rotating-frame spectra sums, one per phase.
    pub stationary: Vec<StationarySums>,
    /// Fixed-frame window sums, one per phase.
    pub windowed: Vec<WindowSums>,
}

/// Everything fixed by the configuration that a block needs.
#[derive(Debug, Clone)]
pub struct Plan {
    pub params: DimensionlessParams,
    pub integrator: IntegratorConfig,
    pub master_seed: u64,
    pub sample_every: u64,
    pub h: f64,
    pub samples: usize,
    pub mode: DetectionMode,
    pub phis: Vec<f64>,
    pub omega: Vec<f64>,
    /// First sample used for stationary spectra.
    pub cutoff_index: usize,
    pub window_start_index: usize,
    pub window: Option<WindowTable>,
    pub theta0: Option<f64>,
    pub blocks: Vec<BlockSpec>,
    pub initial: FieldState,
}

impl Plan {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let params = config.params()?;
        let integrator = config.integrator_config()?;
        let sample_every = config.integrator.sample_every;
        let h = config.sample_spacing();
        let samples = (integrator.steps / sample_every) as usize + 1;
        let omega = config.omega_grid();
        let phis: Vec<f64> = config.detection.phi_deg.iter().map(|d| d.to_radians()).collect();
        let cutoff_index = (config.ensemble.stationary_cutoff / h).ceil() as usize;
        let (window, window_start_index) = match config.detection.mode {
            DetectionMode::Fixed => {
                let t = config.window_length()?;
                (Some(WindowTable::new(&omega, h, t)?), (config.detection.window_start / h).round() as usize)
            }
            DetectionMode::Rotating => (None, 0),
        };
        if let Some(w) = &window {
            if window_start_index + w.samples() > samples {
                return Err(OpoError::Config("detection window exceeds the simulated span".into()));
            }
        }
        let bs = config.block_size();
        let n = config.ensemble.trajectories;
        let blocks = (0..n.div_ceil(bs))
            .map(|i| BlockSpec { index: i as usize, first: i * bs, count: bs.min(n - i * bs) })
            .collect();
        let initial = FieldState::from_steady_state(&steady_state(params.sigma, 0.0)?);
        Ok(Plan {
            params,
            integrator,
            master_seed: config.ensemble.master_seed,
            sample_every,
            h,
            samples,
            mode: config.detection.mode,
            phis,
            omega,
            cutoff_index,
            window_start_index,
            window,
            theta0: config.detection.theta0,
            blocks,
            initial,
        })
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.samples).map(|i| i as f64 * self.h).collect()
    }

    fn stationary_len(&self) -> usize {
        self.samples - self.cutoff_index
    }

    fn empty_block(&self, spec: BlockSpec) -> BlockResult {
        let (stationary, windowed) = match self.mode {
            DetectionMode::Rotating => (self.phis.iter().map(|_| StationarySums::new(self.stationary_len())).collect(), Vec::new()),
            DetectionMode::Fixed => (Vec::new(), self.phis.iter().map(|_| WindowSums::new(self.omega.len())).collect()),
        };
        BlockResult {
            spec,
            completed: 0,
            diverged: Vec::new(),
            branch_cut_steps: 0,
            suspect_jumps: 0,
            max_conjugate_asymmetry: 0.0,
            theta: MomentSums::new(self.samples),
            stationary,
            windowed,
        }
    }

    /// Integrate the trajectories of one block and sum their observables.
    pub fn run_block(&self, spec: BlockSpec) -> BlockResult {
        match self.integrator.system {
            SystemKind::Full => self.run_block_with(&FullModel { p: self.params }, spec),
            SystemKind::Reduced => self.run_block_with(&ReducedModel { p: self.params }, spec),
            SystemKind::Adiabatic => self.run_block_with(&AdiabaticModel { p: self.params }, spec),
        }
    }

    fn run_block_with<M: Model<N>, const N: usize>(&self, model: &M, spec: BlockSpec) -> BlockResult {
        let mut out = self.empty_block(spec);
        let mut planner = FftPlanner::new();
        let nq = self.phis.len();
        let qlen = match self.mode {
            DetectionMode::Rotating => self.stationary_len(),
            DetectionMode::Fixed => self.window.as_ref().map_or(0, |w| w.samples()),
        };
        let mut theta = vec![0.0; self.samples];
        let mut quads = vec![vec![C::new(0.0, 0.0); qlen]; nq];
        for k in spec.first..spec.first + spec.count {
            let mut rng = trajectory_rng(self.master_seed, k);
            let mut unwrap = ThetaUnwrapper::new();
            let mut undefined_at: Option<u64> = None;
            let mut theta0 = self.theta0.unwrap_or(0.0);
            let mut final_asym = 0.0;
            let last = self.integrator.steps;
            let mut observer = |step: u64, _tau: f64, sig: &Signal, state: &[C; N]| {
                if step == last {
                    final_asym = model.to_field(state).conjugate_asymmetry();
                }
                if !step.is_multiple_of(self.sample_every) || undefined_at.is_some() {
                    return;
                }
                let i = (step / self.sample_every) as usize;
                let th = match extract_theta(sig) {
                    Ok(raw) => unwrap.push(raw),
                    Err(_) => {
                        undefined_at = Some(step);
                        return;
                    }
                };
                theta[i] = th;
                match self.mode {
                    DetectionMode::Rotating => {
                        if i >= self.cutoff_index {
                            for (q, &phi) in quads.iter_mut().zip(&self.phis) {
                                q[i - self.cutoff_index] = dark_quadrature_at(sig, phi, th);
                            }
                        }
                    }
                    DetectionMode::Fixed => {
                        if i == self.window_start_index && self.theta0.is_none() {
                            theta0 = th;
                        }
                        if i >= self.window_start_index && i - self.window_start_index < qlen {
                            for (q, &phi) in quads.iter_mut().zip(&self.phis) {
                                q[i - self.window_start_index] = dark_quadrature_at(sig, phi, theta0);
                            }
                        }
                    }
                }
            };
            let outcome = integrate_trajectory(model, &self.initial, &self.integrator, &mut rng, &mut observer);
            out.branch_cut_steps += outcome.branch_cut_steps;
            let failed = match (outcome.status, undefined_at) {
                (TrajectoryStatus::Diverged { step }, _) => Some(step),
                (_, Some(step)) => Some(step),
                _ => None,
            };
            if let Some(step) = failed {
                out.diverged.push(DivergedTrajectory { trajectory: k, step });
                continue;
            }
            out.completed += 1;
            out.suspect_jumps += unwrap.suspect_jumps();
            out.max_conjugate_asymmetry = out.max_conjugate_asymmetry.max(final_asym);
            out.theta.push(&theta);
            match self.mode {
                DetectionMode::Rotating => {
                    for (s, q) in out.stationary.iter_mut().zip(&quads) {
                        s.push(q, &mut planner);
                    }
                }
                DetectionMode::Fixed => {
                    let table = self.window.as_ref().expect("fixed mode has a window");
                    for (s, q) in out.windowed.iter_mut().zip(&quads) {
                        table.push(s, q);
                    }
                }
            }
        }
        out
    }
}

/// Digest identifying the configuration fields that affect block contents.
pub fn config_digest(config: &RunConfig) -> Result<String> {
    let mut c = config.clone();
    c.output = Default::default();
    c.ensemble.workers = 0;
    c.ensemble.divergence_threshold = 0.0;
    let text = serde_json::to_string(&c).map_err(|e| OpoError::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    config_digest: String,
    block: BlockResult,
}

fn checkpoint_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("block-{index:06}.json"))
}

fn load_checkpoint(dir: &Path, spec: BlockSpec, digest: &str) -> Option<BlockResult> {
    let text = std::fs::read_to_string(checkpoint_path(dir, spec.index)).ok()?;
    let c: Checkpoint = serde_json::from_str(&text).ok()?;
    (c.config_digest == digest && c.block.spec == spec).then_some(c.block)
}

fn save_checkpoint(dir: &Path, block: &BlockResult, digest: &str) -> Result<()> {
    let path = checkpoint_path(dir, block.spec.index);
    let tmp = path.with_extension("tmp");
    let c = Checkpoint { config_digest: digest.to_string(), block: block.clone() };
    let text = serde_json::to_string(&c).map_err(|e| OpoError::Io(e.to_string()))?;
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

/// Which blocks this process is responsible for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub count: usize,
}

impl Shard {
    pub const ALL: Shard = Shard { index: 0, count: 1 };

    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('/').ok_or_else(|| OpoError::Config(format!("shard '{s}' is not of the form i/n")))?;
        let index: usize = a.trim().parse().map_err(|_| OpoError::Config(format!("bad shard index '{a}'")))?;
        let count: usize = b.trim().parse().map_err(|_| OpoError::Config(format!("bad shard count '{b}'")))?;
        if count == 0 || index >= count {
            return Err(OpoError::Config(format!("shard {index}/{count} out of range")));
        }
        Ok(Shard { index, count })
    }

    fn owns(&self, block: usize) -> bool {
        block % self.count == self.index
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Overrides `ensemble.workers`.
    pub workers: Option<usize>,
    pub shard: Option<Shard>,
    /// Directory for per-block checkpoints; `None` disables checkpointing.
    pub checkpoint_dir: Option<PathBuf>,
    pub progress: bool,
}

/// Blocks of an ensemble, complete or partial.
#[derive(Debug, Clone)]
pub struct BlockSet {
    pub blocks: Vec<Option<BlockResult>>,
    pub resumed: usize,
}

impl BlockSet {
    pub fn is_complete(&self) -> bool {
        self.blocks.iter().all(Option::is_some)
    }

    pub fn into_complete(self) -> Option<Vec<BlockResult>> {
        self.blocks.into_iter().collect()
    }
}

/// Run the blocks owned by this process, resuming from checkpoints when present.
pub fn execute(config: &RunConfig, plan: &Plan, opts: &ExecOptions) -> Result<BlockSet> {
    let digest = config_digest(config)?;
    if let Some(dir) = &opts.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    let shard = opts.shard.unwrap_or(Shard::ALL);
    let mut blocks: Vec<Option<BlockResult>> = plan
        .blocks
        .iter()
        .map(|s| opts.checkpoint_dir.as_deref().and_then(|d| load_checkpoint(d, *s, &digest)))
        .collect();
    let resumed = blocks.iter().filter(|b| b.is_some()).count();
    let todo: Vec<BlockSpec> = plan.blocks.iter().filter(|s| blocks[s.index].is_none() && shard.owns(s.index)).copied().collect();
    let workers = opts.workers.unwrap_or(config.ensemble.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| OpoError::Config(format!("thread pool: {e}")))?;
    let total = plan.blocks.len();
    let done: Vec<Result<BlockResult>> = pool.install(|| {
        todo.par_iter()
            .map(|spec| {
                let b = plan.run_block(*spec);
                if let Some(dir) = &opts.checkpoint_dir {
                    save_checkpoint(dir, &b, &digest)?;
                }
                if opts.progress {
                    eprintln!("block {}/{} done ({} trajectories, {} diverged)", spec.index + 1, total, b.completed, b.diverged.len());
                }
                Ok(b)
            })
            .collect()
    });
    for b in done {
        let b = b?;
        let i = b.spec.index;
        blocks[i] = Some(b);
    }
    Ok(BlockSet { blocks, resumed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut c = RunConfig::rotating_default(6, 11);
        c.model.as_mut().unwrap().g = 0.05;
        c.integrator.dt = 0.01;
        c.integrator.tau_end = 4.0;
        c.ensemble.stationary_cutoff = 1.0;
        c.ensemble.block_size = 2;
        c.detection.max_lag = 1.0;
        c
    }

    #[test]
    fn blocks_cover_trajectories() {
        let mut c = tiny();
        c.ensemble.trajectories = 7;
        c.ensemble.block_size = 3;
        let p = Plan::new(&c).unwrap();
        let counts: Vec<u64> = p.blocks.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![3, 3, 1]);
        assert_eq!(p.blocks[2].first, 6);
    }

    #[test]
    fn block_is_reproducible_and_independent_of_neighbours() {
        let c = tiny();
        let p = Plan::new(&c).unwrap();
        let a = p.run_block(p.blocks[1]);
        let b = p.run_block(p.blocks[1]);
        assert_eq!(a, b);
        assert_eq!(a.completed, 2);
        assert_eq!(a.theta.s1[0], 0.0);
        assert!(a.theta.s2.last().unwrap() > &0.0);
    }

    #[test]
    fn full_system_keeps_conjugate_pairs() {
        let mut c = tiny();
        c.integrator.system = SystemKind::Full;
        let p = Plan::new(&c).unwrap();
        let b = p.run_block(p.blocks[0]);
        assert!(b.max_conjugate_asymmetry < 1e-8, "{}", b.max_conjugate_asymmetry);
    }

    #[test]
    fn shards_and_checkpoints() {
        let c = tiny();
        let p = Plan::new(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = |i| ExecOptions { workers: Some(1), shard: Some(Shard { index: i, count: 2 }), checkpoint_dir: Some(dir.path().to_path_buf()), progress: false };
        let s0 = execute(&c, &p, &opts(0)).unwrap();
        assert!(!s0.is_complete());
        let s1 = execute(&c, &p, &opts(1)).unwrap();
        assert!(s1.is_complete());
        assert_eq!(s1.resumed, 2);
        let single = execute(&c, &p, &ExecOptions { workers: Some(1), ..Default::default() }).unwrap();
        assert_eq!(s1.into_complete().unwrap(), single.into_complete().unwrap());
        // a different seed must not pick up stale checkpoints
        let mut other = c.clone();
        other.ensemble.master_seed += 1;
        let p2 = Plan::new(&other).unwrap();
        let r = execute(&other, &p2, &ExecOptions { workers: Some(1), shard: Some(Shard { index: 0, count: 2 }), checkpoint_dir: Some(dir.path().to_path_buf()), progress: false }).unwrap();
        assert_eq!(r.resumed, 0);
    }

    #[test]
    fn shard_parsing() {
        assert_eq!(Shard::parse("1/4").unwrap(), Shard { index: 1, count: 4 });
        assert!(Shard::parse("4/4").is_err());
        assert!(Shard::parse("x").is_err());
    }
}
