use super::output::{read_csv, RunManifest, SpectrumKind};
use crate::analytics::{dark_quadrature_spectrum, fixed_lo_spectrum_with, FixedLoForm};
use crate::error::{OpoError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub z_max: f64,
    pub slope_tol: f64,
    pub r2_min: f64,
    pub fit_low: f64,
    pub fit_high: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { z_max: 3.0, slope_tol: 0.03, r2_min: 0.99, fit_low: 0.9, fit_high: 1.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub stderr: f64,
    /// `(value - expected) / stderr`, when an error bar exists.
    pub z: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl CompareReport {
    fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        CompareReport { checks, pass }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let z = c.z.map_or("-".to_string(), |z| format!("{z:+.2}"));
            s.push_str(&format!(
                "{} {:<40} value {:.6e} expected {:.6e} stderr {:.2e} z {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.expected,
                c.stderr,
                z
            ));
        }
        s.push_str(if self.pass { "overall PASS\n" } else { "overall FAIL\n" });
        s
    }
}

fn z_check(name: String, value: f64, expected: f64, stderr: f64, z_max: f64) -> Check {
    let z = (value - expected) / stderr;
    Check { name, value, expected, stderr, z: Some(z), pass: z.is_finite() && z.abs() < z_max }
}

fn load_spectrum(dir: &Path, file: &str) -> Result<Vec<(f64, f64, f64)>> {
    let (_, rows) = read_csv(&dir.join(file))?;
    Ok(rows.into_iter().map(|r| (r[0], r[1], r[2])).collect())
}

/// Compare a finished run with the linearized theory.
pub fn compare_with_theory(dir: &Path, tol: &Tolerances, form: FixedLoForm) -> Result<CompareReport> {
    let m = RunManifest::load(dir)?;
    let p = m.params;
    let mut checks = Vec::new();
    if let Some(s) = &m.results.theta_slope {
        checks.push(Check {
            name: "V_theta/D slope".into(),
            value: s.fit.slope,
            expected: 1.0,
            stderr: s.slope_stderr,
            z: Some((s.fit.slope - 1.0) / s.slope_stderr),
            pass: (s.fit.slope - 1.0).abs() <= tol.slope_tol,
        });
        checks.push(Check { name: "V_theta/D R^2".into(), value: s.fit.r2, expected: 1.0, stderr: 0.0, z: None, pass: s.fit.r2 > tol.r2_min });
    }
    let t = m.config.window_length().ok();
    for sp in &m.results.spectra {
        let phi = sp.phi_deg.to_radians();
        for (w, v, e) in load_spectrum(dir, &sp.file)? {
            let expected = match sp.kind {
                SpectrumKind::Stationary => dark_quadrature_spectrum(w, phi),
                SpectrumKind::Windowed => {
                    let t = t.ok_or_else(|| OpoError::Config("windowed spectrum without a window length".into()))?;
                    fixed_lo_spectrum_with(w, phi, t, p.d(), p.sigma, form)
                }
            };
            checks.push(z_check(format!("{:?} phi={} omega={w}", sp.kind, sp.phi_deg), v, expected, e, tol.z_max));
        }
    }
    if let Some(f) = &m.results.fit {
        for (name, v, e) in [("fit a", f.a, f.a_err), ("fit b", f.b, f.b_err)] {
            checks.push(Check {
                name: name.into(),
                value: v,
                expected: 1.0,
                stderr: e,
                z: Some((v - 1.0) / e),
                pass: v >= tol.fit_low && v <= tol.fit_high,
            });
        }
    }
    if checks.is_empty() {
        return Err(OpoError::InsufficientSamples("run has no estimated observables to compare".into()));
    }
    Ok(CompareReport::new(checks))
}

/// Two-sample comparison of runs with identical model parameters.
pub fn compare_runs(dir_a: &Path, dir_b: &Path, tol: &Tolerances) -> Result<CompareReport> {
    let a = RunManifest::load(dir_a)?;
    let b = RunManifest::load(dir_b)?;
    if a.params != b.params {
        return Err(OpoError::Mismatch(format!("model parameters differ: {:?} vs {:?}", a.params, b.params)));
    }
    let mut checks = Vec::new();
    if let (Some(sa), Some(sb)) = (&a.results.theta_slope, &b.results.theta_slope) {
        let se = sa.slope_stderr.hypot(sb.slope_stderr);
        checks.push(z_check("V_theta/D slope difference".into(), sa.fit.slope - sb.fit.slope, 0.0, se, tol.z_max));
    }
    for sa in &a.results.spectra {
        let Some(sb) = b.results.spectra.iter().find(|s| s.kind == sa.kind && s.phi_deg == sa.phi_deg) else { continue };
        let xa = load_spectrum(dir_a, &sa.file)?;
        let xb = load_spectrum(dir_b, &sb.file)?;
        for ((w, va, ea), (wb, vb, eb)) in xa.iter().zip(&xb) {
            if w != wb {
                return Err(OpoError::Mismatch(format!("frequency grids differ for phi = {}", sa.phi_deg)));
            }
            checks.push(z_check(format!("{:?} phi={} omega={w} difference", sa.kind, sa.phi_deg), va - vb, 0.0, ea.hypot(*eb), tol.z_max));
        }
    }
    if checks.is_empty() {
        return Err(OpoError::InsufficientSamples("runs have no comparable estimates".into()));
    }
    Ok(CompareReport::new(checks))
}
