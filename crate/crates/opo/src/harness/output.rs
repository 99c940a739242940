use super::config::RunConfig;
use super::runner::{config_digest, execute, BlockResult, DivergedTrajectory, ExecOptions, Plan};
use crate::analytics::DetectionMode;
use crate::error::{OpoError, Result};
use crate::observables::{
    diffusion_slope, ensemble_variance, fit_squeezing, fit_squeezing_jackknife, stationary_leave_out, stationary_spectrum,
    windowed_spectrum, MomentSums, SlopeEstimate,
};
use crate::params::DimensionlessParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VARIANCE_FILE: &str = "variance.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardSeed {
    pub block: usize,
    pub first_trajectory: u64,
    pub count: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Stationary,
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub phi_deg: f64,
    pub kind: SpectrumKind,
    pub file: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub phi_deg: f64,
    pub a: f64,
    pub b: f64,
    #[serde(with = "crate::observables::nullable_f64")]
    pub a_err: f64,
    #[serde(with = "crate::observables::nullable_f64")]
    pub b_err: f64,
    pub chi2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub completed: u64,
    pub diverged: u64,
    /// First few divergent trajectories with the step where they failed.
    pub diverged_examples: Vec<DivergedTrajectory>,
    pub branch_cut_steps: u64,
    pub suspect_jumps: u64,
    pub max_conjugate_asymmetry: f64,
    /// Regression of `V_theta / D` against time.
    pub theta_slope: Option<SlopeEstimate>,
    pub spectra: Vec<SpectrumFile>,
    pub fit: Option<FitRecord>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub config_digest: String,
    pub params: DimensionlessParams,
    pub diffusion: f64,
    pub shards: Vec<ShardSeed>,
    pub workers: usize,
    pub wall_time_s: f64,
    pub results: RunResults,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let p = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&p)?;
        serde_json::from_str(&text).map_err(|e| OpoError::Config(format!("{}: {e}", p.display())))
    }
}

/// Format with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| OpoError::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| OpoError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|x| fmt17(*x))).map_err(|e| OpoError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a numeric CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| OpoError::Io(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| OpoError::Io(e.to_string()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| OpoError::Io(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| OpoError::Io(format!("{}: bad number '{s}'", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn phi_label(phi_deg: f64) -> String {
    format!("{phi_deg}").replace('-', "m")
}

pub fn spectrum_file_name(kind: SpectrumKind, phi_deg: f64) -> String {
    match kind {
        SpectrumKind::Stationary => format!("spectrum_phi{}.csv", phi_label(phi_deg)),
        SpectrumKind::Windowed => format!("windowed_phi{}.csv", phi_label(phi_deg)),
    }
}

/// Reduce completed blocks to output files and a manifest in `dir`.
pub fn finalize(config: &RunConfig, plan: &Plan, blocks: &[BlockResult], dir: &Path, wall_time_s: f64, workers: usize) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let params = plan.params;
    let (_, diffusion) = params.require_above_threshold()?;
    let times = plan.sample_times();
    let completed: u64 = blocks.iter().map(|b| b.completed).sum();
    let diverged_all: Vec<DivergedTrajectory> = blocks.iter().flat_map(|b| b.diverged.iter().copied()).collect();
    let mut notes = Vec::new();
    let mut files = Vec::new();

    let thetas: Vec<MomentSums> = blocks.iter().map(|b| b.theta.clone()).collect();
    let (theta_slope, var_rows): (Option<SlopeEstimate>, Vec<Vec<f64>>) = if completed >= 2 {
        let stats = ensemble_variance(&times, &thetas, diverged_all.len() as u64)?;
        let rows = (0..times.len())
            .map(|i| vec![times[i], stats.mean[i], stats.variance[i], stats.stderr[i], stats.variance[i] / diffusion])
            .collect();
        let slope = if diffusion > 0.0 { Some(diffusion_slope(&times, &thetas, diffusion)?) } else { None };
        (slope, rows)
    } else {
        notes.push("fewer than two completed trajectories: variances and spectra not estimated".into());
        let mut total = MomentSums::new(times.len());
        for t in &thetas {
            total.merge(t);
        }
        let mean = total.mean();
        (None, (0..times.len()).map(|i| vec![times[i], mean[i], f64::NAN, f64::NAN, f64::NAN]).collect())
    };
    let var_path = dir.join(VARIANCE_FILE);
    write_csv(&var_path, &["tau", "mean_theta", "var_theta", "stderr", "var_theta_over_d"], &var_rows)?;
    files.push(VARIANCE_FILE.to_string());

    let mut spectra = Vec::new();
    let mut fit = None;
    if completed >= 2 {
        for (j, &phi_deg) in config.detection.phi_deg.iter().enumerate() {
            let (kind, v, e) = match plan.mode {
                DetectionMode::Rotating => {
                    let sums: Vec<_> = blocks.iter().map(|b| b.stationary[j].clone()).collect();
                    let (v, e) = stationary_spectrum(&sums, plan.h, params.g, config.detection.max_lag, &plan.omega)?;
                    if (phi_deg - 90.0).abs() < 1e-9 && plan.omega.iter().filter(|w| **w > 0.0).count() >= 2 {
                        match fit_squeezing(&plan.omega, &v, &e) {
                            Ok(f) => {
                                let leave = stationary_leave_out(&sums, plan.h, params.g, config.detection.max_lag, &plan.omega);
                                let (a_err, b_err) =
                                    if leave.len() >= 2 { fit_squeezing_jackknife(&plan.omega, &leave, &e)? } else { (f64::NAN, f64::NAN) };
                                fit = Some(FitRecord { phi_deg, a: f.a, b: f.b, a_err, b_err, chi2: f.chi2 });
                            }
                            Err(err) => notes.push(format!("squeezing fit skipped: {err}")),
                        }
                    }
                    (SpectrumKind::Stationary, v, e)
                }
                DetectionMode::Fixed => {
                    let sums: Vec<_> = blocks.iter().map(|b| b.windowed[j].clone()).collect();
                    let table = plan.window.as_ref().expect("fixed mode has a window");
                    let (v, e) = windowed_spectrum(table, &sums, params.g)?;
                    (SpectrumKind::Windowed, v, e)
                }
            };
            let name = spectrum_file_name(kind, phi_deg);
            let rows: Vec<Vec<f64>> = (0..plan.omega.len()).map(|i| vec![plan.omega[i], v[i], e[i]]).collect();
            write_csv(&dir.join(&name), &["omega", "v_out", "stderr"], &rows)?;
            files.push(name.clone());
            spectra.push(SpectrumFile { phi_deg, kind, file: name });
        }
    }

    let outputs = files
        .iter()
        .map(|f| Ok(OutputFile { name: f.clone(), sha256: sha256_file(&dir.join(f))? }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: "opo".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        config_digest: config_digest(config)?,
        params,
        diffusion,
        shards: plan
            .blocks
            .iter()
            .map(|b| ShardSeed { block: b.index, first_trajectory: b.first, count: b.count, master_seed: plan.master_seed })
            .collect(),
        workers,
        wall_time_s,
        results: RunResults {
            completed,
            diverged: diverged_all.len() as u64,
            diverged_examples: diverged_all.iter().take(20).copied().collect(),
            branch_cut_steps: blocks.iter().map(|b| b.branch_cut_steps).sum(),
            suspect_jumps: blocks.iter().map(|b| b.suspect_jumps).sum(),
            max_conjugate_asymmetry: blocks.iter().map(|b| b.max_conjugate_asymmetry).fold(0.0, f64::max),
            theta_slope,
            spectra,
            fit,
            notes,
        },
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| OpoError::Io(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum RunOutcome {
    Finished(RunManifest),
    /// Some blocks belong to other shards and have not been computed yet.
    Partial { done: usize, total: usize },
}

/// Execute an ensemble, write its outputs, and enforce the divergence threshold.
pub fn run_ensemble(config: &RunConfig, opts: &ExecOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let plan = Plan::new(config)?;
    let dir = config.output.dir.clone();
    let mut opts = opts.clone();
    if opts.checkpoint_dir.is_none() && config.output.checkpoint {
        opts.checkpoint_dir = Some(dir.join("checkpoint"));
    }
    let set = execute(config, &plan, &opts)?;
    let total = set.blocks.len();
    let done = set.blocks.iter().filter(|b| b.is_some()).count();
    let Some(blocks) = set.into_complete() else {
        return Ok(RunOutcome::Partial { done, total });
    };
    let workers = opts.workers.unwrap_or(config.ensemble.workers);
    let workers = if workers == 0 { rayon::current_num_threads() } else { workers };
    let manifest = finalize(config, &plan, &blocks, &dir, start.elapsed().as_secs_f64(), workers)?;
    check_divergence(&manifest)?;
    Ok(RunOutcome::Finished(manifest))
}

pub fn check_divergence(m: &RunManifest) -> Result<()> {
    let total = m.config.ensemble.trajectories;
    let frac = m.results.diverged as f64 / total as f64;
    if frac > m.config.ensemble.divergence_threshold {
        return Err(OpoError::DivergenceThreshold { diverged: m.results.diverged, total, threshold: m.config.ensemble.divergence_threshold });
    }
    Ok(())
}

/// Re-run the configuration recorded in a manifest and check that every output digest matches.
pub fn replay_manifest(manifest_path: &Path, out_dir: Option<PathBuf>, opts: &ExecOptions) -> Result<RunManifest> {
    let old = RunManifest::load(manifest_path)?;
    let mut config = old.config.clone();
    if let Some(d) = out_dir {
        config.output.dir = d;
    }
    let RunOutcome::Finished(new) = run_ensemble(&config, opts)? else {
        return Err(OpoError::Config("replay cannot run as a partial shard".into()));
    };
    for f in &old.outputs {
        let found = new.outputs.iter().find(|g| g.name == f.name);
        match found {
            Some(g) if g.sha256 == f.sha256 => {}
            Some(g) => return Err(OpoError::Mismatch(format!("{}: digest {} differs from recorded {}", f.name, g.sha256, f.sha256))),
            None => return Err(OpoError::Mismatch(format!("{} was not produced on replay", f.name))),
        }
    }
    Ok(new)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt17(f64::NAN), "NaN");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![vec![1.0, 0.1 + 0.2], vec![f64::NAN, -3.0]];
        write_csv(&p, &["a", "b"], &rows).unwrap();
        let (h, back) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(back[0], rows[0]);
        assert!(back[1][0].is_nan());
    }

    #[test]
    fn file_names() {
        assert_eq!(spectrum_file_name(SpectrumKind::Stationary, 90.0), "spectrum_phi90.csv");
        assert_eq!(spectrum_file_name(SpectrumKind::Windowed, 89.5), "windowed_phi89.5.csv");
    }
}
