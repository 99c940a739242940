use crate::analytics::{optimal_detection_time, DetectionMode};
use crate::error::{OpoError, Result};
use crate::params::{dimensionless, DimensionlessParams, PhysicalSetup};
use crate::sde::{IntegratorConfig, SystemKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Complete description of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DimensionlessParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSetup>,
    pub integrator: IntegratorSection,
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub detection: DetectionSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub tau_end: f64,
    #[serde(default = "default_iterations")]
    pub midpoint_iterations: u32,
    #[serde(default)]
    pub system: SystemKind,
    /// Observables are recorded every this many steps.
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub trajectories: u64,
    pub master_seed: u64,
    /// Samples before this time are excluded from stationary spectra.
    #[serde(default = "default_cutoff")]
    pub stationary_cutoff: f64,
    /// Trajectories per block; 0 picks about 40 blocks.
    #[serde(default)]
    pub block_size: u64,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_divergence_threshold")]
    pub divergence_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    #[serde(default)]
    pub mode: DetectionMode,
    /// Local oscillator phases in degrees.
    #[serde(default = "default_phis")]
    pub phi_deg: Vec<f64>,
    /// Explicit frequency grid; when empty, `omega_points` values on `[0, omega_max]`.
    #[serde(default)]
    pub omega: Vec<f64>,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    /// Lag cutoff of the stationary autocovariance.
    #[serde(default = "default_max_lag")]
    pub max_lag: f64,
    /// Start of the fixed-frame detection window.
    #[serde(default = "default_window_start")]
    pub window_start: f64,
    /// Window length; defaults to the optimal detection time.
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Frozen orientation; defaults to each trajectory's orientation at the window start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub checkpoint: bool,
}

fn default_iterations() -> u32 {
    2
}
fn default_sample_every() -> u64 {
    10
}
fn default_cutoff() -> f64 {
    10.0
}
fn default_divergence_threshold() -> f64 {
    1e-3
}
fn default_phis() -> Vec<f64> {
    vec![0.0, 90.0]
}
fn default_omega_max() -> f64 {
    10.0
}
fn default_omega_points() -> usize {
    41
}
fn default_max_lag() -> f64 {
    5.0
}
fn default_window_start() -> f64 {
    5.0
}
fn default_dir() -> PathBuf {
    PathBuf::from("opo-out")
}
fn default_true() -> bool {
    true
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            mode: DetectionMode::Rotating,
            phi_deg: default_phis(),
            omega: Vec::new(),
            omega_max: default_omega_max(),
            omega_points: default_omega_points(),
            max_lag: default_max_lag(),
            window_start: default_window_start(),
            t: None,
            theta0: None,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), checkpoint: true }
    }
}

impl RunConfig {
    /// Orientation-diffusion and rotating-frame spectrum run at `sigma = sqrt 2`, `kappa = 1`, `g = 1e-3`.
    pub fn rotating_default(trajectories: u64, master_seed: u64) -> Self {
        RunConfig {
            model: Some(DimensionlessParams { sigma: std::f64::consts::SQRT_2, kappa: 1.0, g: 1e-3 }),
            physical: None,
            integrator: IntegratorSection {
                dt: 3e-3,
                tau_end: 30.0,
                midpoint_iterations: 2,
                system: SystemKind::Reduced,
                sample_every: 10,
            },
            ensemble: EnsembleSection {
                trajectories,
                master_seed,
                stationary_cutoff: 10.0,
                block_size: 0,
                workers: 0,
                divergence_threshold: default_divergence_threshold(),
            },
            detection: DetectionSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Fixed local oscillator run with `d = 1e-4`, `kappa = 10`, window of length `T_opt` starting at 5.
    pub fn fixed_default(trajectories: u64, master_seed: u64) -> Self {
        let mut c = Self::rotating_default(trajectories, master_seed);
        c.model = Some(DimensionlessParams { sigma: std::f64::consts::SQRT_2, kappa: 10.0, g: 0.02 });
        c.integrator.dt = 5e-3;
        c.integrator.sample_every = 4;
        c.detection.mode = DetectionMode::Fixed;
        c.detection.phi_deg = vec![88.0, 90.0];
        c.detection.omega = vec![0.0];
        c.detection.window_start = 5.0;
        // T_opt rounded to the sample spacing; tau_end covers the window
        let t = optimal_detection_time(std::f64::consts::SQRT_2, 1e-4).expect("valid parameters");
        let h = c.integrator.dt * c.integrator.sample_every as f64;
        let t = (t / h).round() * h;
        c.detection.t = Some(t);
        c.integrator.tau_end = ((c.detection.window_start + t) / h).ceil() * h;
        c
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| OpoError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OpoError::Config(e.to_string()))
    }

    /// Model parameters, taken from `[model]` or derived from `[physical]`.
    pub fn params(&self) -> Result<DimensionlessParams> {
        let p = match (&self.model, &self.physical) {
            (Some(m), None) => *m,
            (None, Some(s)) => {
                s.validate()?;
                dimensionless(s, None)?
            }
            (Some(_), Some(_)) => return Err(OpoError::Config("give either [model] or [physical], not both".into())),
            (None, None) => return Err(OpoError::Config("missing [model] or [physical] section".into())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let i = &self.integrator;
        IntegratorConfig::from_tau_end(i.dt, i.tau_end, i.midpoint_iterations, i.system)
    }

    /// Sample spacing of recorded observables.
    pub fn sample_spacing(&self) -> f64 {
        self.integrator.dt * self.integrator.sample_every as f64
    }

    pub fn omega_grid(&self) -> Vec<f64> {
        let d = &self.detection;
        if !d.omega.is_empty() {
            return d.omega.clone();
        }
        if d.omega_points < 2 {
            return vec![0.0];
        }
        (0..d.omega_points).map(|k| d.omega_max * k as f64 / (d.omega_points - 1) as f64).collect()
    }

    /// Window length, defaulting to the optimal detection time.
    pub fn window_length(&self) -> Result<f64> {
        match self.detection.t {
            Some(t) => Ok(t),
            None => {
                let p = self.params()?;
                optimal_detection_time(p.sigma, p.d())
            }
        }
    }

    /// Trajectories per block.
    pub fn block_size(&self) -> u64 {
        if self.ensemble.block_size > 0 {
            self.ensemble.block_size
        } else {
            self.ensemble.trajectories.div_ceil(40).max(1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.params()?;
        p.require_above_threshold()?;
        let integ = self.integrator_config()?;
        let e = &self.ensemble;
        if e.trajectories < 1 {
            return Err(OpoError::Config("ensemble.trajectories must be at least 1".into()));
        }
        if self.integrator.sample_every < 1 || self.integrator.sample_every > integ.steps || integ.steps % self.integrator.sample_every != 0 {
            return Err(OpoError::Config("integrator.sample_every must divide the number of steps".into()));
        }
        if !(e.stationary_cutoff >= 0.0 && e.stationary_cutoff < integ.tau_end()) {
            return Err(OpoError::Config(format!(
                "stationary_cutoff = {} must lie in [0, tau_end = {})",
                e.stationary_cutoff,
                integ.tau_end()
            )));
        }
        if !(0.0..=1.0).contains(&e.divergence_threshold) {
            return Err(OpoError::Config("divergence_threshold must lie in [0, 1]".into()));
        }
        let d = &self.detection;
        if d.phi_deg.is_empty() {
            return Err(OpoError::Config("detection.phi_deg must list at least one phase".into()));
        }
        if d.phi_deg.iter().chain(&self.omega_grid()).any(|x| !x.is_finite()) {
            return Err(OpoError::Config("detection phases and frequencies must be finite".into()));
        }
        let h = self.sample_spacing();
        match d.mode {
            DetectionMode::Rotating => {
                if !(d.max_lag > 0.0) || d.max_lag >= integ.tau_end() - e.stationary_cutoff {
                    return Err(OpoError::Config(format!(
                        "max_lag = {} must be positive and shorter than the post-cutoff span {}",
                        d.max_lag,
                        integ.tau_end() - e.stationary_cutoff
                    )));
                }
            }
            DetectionMode::Fixed => {
                let t = self.window_length()?;
                if !(t > 0.0) || !(d.window_start >= 0.0) {
                    return Err(OpoError::Config("window start and length must be non-negative and positive".into()));
                }
                if d.window_start + t > integ.tau_end() * (1.0 + 1e-12) {
                    return Err(OpoError::Config(format!(
                        "window [{}, {}] exceeds the simulated span tau_end = {}",
                        d.window_start,
                        d.window_start + t,
                        integ.tau_end()
                    )));
                }
                for (name, x) in [("window_start", d.window_start), ("T", t)] {
                    let m = (x / h).round();
                    if (m * h - x).abs() > 1e-9 * x.max(h) {
                        return Err(OpoError::Config(format!("{name} = {x} is not a multiple of the sample spacing {h}")));
                    }
                }
            }
        }
        Ok(())
    }
}
