//! The acceptance suite, shared by `opo validate` and the integration tests.

use crate::analytics::{
    analyze_full_linear, composed_dark_phase_spectrum, dark_quadrature_spectrum, eigensystem, fixed_lo_spectrum_with, linear_matrix,
    minimize_detection_time, optimal_detection_time, wiener_trig_correlations, FixedLoForm,
};
use crate::error::{OpoError, Result};
use crate::harness::output::{read_csv, run_ensemble, spectrum_file_name, SpectrumKind};
use crate::harness::{ExecOptions, RunConfig, RunManifest, RunOutcome};
use crate::sde::{gaussian_pair, noise_increment, step_semi_implicit, Increment, NoiseIncrement, SystemKind};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::path::PathBuf;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Ensemble sizes of the acceptance criteria.
    Full,
    /// Ten times fewer trajectories, for smoke runs; statistical tolerances are not guaranteed.
    Quick,
}

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub scale: Scale,
    pub work_dir: PathBuf,
    pub workers: Option<usize>,
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("criterion {}: {} - {}", self.id, if self.pass { "PASS" } else { "FAIL" }, self.title)
    }
}

pub const TITLES: [&str; 9] = [
    "analytic eigensystems",
    "closed-form consistency",
    "orientation diffusion slope",
    "rotating-frame dark spectra",
    "fixed local oscillator spectrum",
    "integrator verification",
    "conjugate pairs and reduced system",
    "Wiener correlation oracle",
    "determinism across worker counts",
];

/// Runs criteria, sharing ensemble runs between criteria that use the same data.
pub struct Validator {
    opts: ValidationOptions,
    runs: BTreeMap<&'static str, (PathBuf, RunManifest)>,
}

fn z(value: f64, expected: f64, err: f64) -> f64 {
    (value - expected) / err
}

impl Validator {
    pub fn new(opts: ValidationOptions) -> Self {
        Validator { opts, runs: BTreeMap::new() }
    }

    fn trajectories(&self, full: u64) -> u64 {
        match self.opts.scale {
            Scale::Full => full,
            Scale::Quick => (full / 10).max(40),
        }
    }

    fn exec(&self) -> ExecOptions {
        ExecOptions { workers: self.opts.workers, shard: None, checkpoint_dir: None, progress: self.opts.progress }
    }

    fn ensemble(&mut self, key: &'static str, config: impl FnOnce(&Self) -> RunConfig) -> Result<(PathBuf, RunManifest)> {
        if let Some(r) = self.runs.get(key) {
            return Ok(r.clone());
        }
        let mut c = config(self);
        let dir = self.opts.work_dir.join(key);
        c.output.dir = dir.clone();
        c.output.checkpoint = true;
        if self.opts.progress {
            eprintln!("running ensemble '{key}' ({} trajectories)", c.ensemble.trajectories);
        }
        let m = match run_ensemble(&c, &self.exec())? {
            RunOutcome::Finished(m) => m,
            RunOutcome::Partial { .. } => return Err(OpoError::Config("unexpected partial run".into())),
        };
        self.runs.insert(key, (dir.clone(), m.clone()));
        Ok((dir, m))
    }

    fn rotating_run(&mut self) -> Result<(PathBuf, RunManifest)> {
        self.ensemble("rotating", |v| RunConfig::rotating_default(v.trajectories(20_000), 20_240_601))
    }

    pub fn run(&mut self, id: u8) -> CriterionResult {
        let title = TITLES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown").to_string();
        let out = match id {
            1 => criterion1(),
            2 => criterion2(),
            3 => self.criterion3(),
            4 => self.criterion4(),
            5 => self.criterion5(),
            6 => criterion6(),
            7 => self.criterion7(),
            8 => criterion8(),
            9 => self.criterion9(),
            _ => Err(OpoError::Config(format!("no criterion {id}"))),
        };
        match out {
            Ok((pass, details)) => CriterionResult { id, title, pass, details },
            Err(e) => CriterionResult { id, title, pass: false, details: vec![format!("error: {e}")] },
        }
    }

    pub fn run_all(&mut self) -> Vec<CriterionResult> {
        (1..=9).map(|i| self.run(i)).collect()
    }

    fn criterion3(&mut self) -> Result<(bool, Vec<String>)> {
        let (_, m) = self.rotating_run()?;
        let s = m.results.theta_slope.ok_or_else(|| OpoError::InsufficientSamples("no slope estimate".into()))?;
        let pass = (s.fit.slope - 1.0).abs() <= 0.03 && s.fit.r2 > 0.99;
        Ok((
            pass,
            vec![
                format!("slope of V_theta/D = {:.5} +- {:.5} (tolerance 1 +- 0.03)", s.fit.slope, s.slope_stderr),
                format!("R^2 = {:.6} (required > 0.99)", s.fit.r2),
                format!("trajectories {} completed, {} diverged", m.results.completed, m.results.diverged),
            ],
        ))
    }

    fn criterion4(&mut self) -> Result<(bool, Vec<String>)> {
        let (dir, m) = self.rotating_run()?;
        let fit = m.results.fit.ok_or_else(|| OpoError::InsufficientSamples("no squeezing fit".into()))?;
        let fit_ok = (0.9..=1.1).contains(&fit.a) && (0.9..=1.1).contains(&fit.b);
        let mut details = vec![format!(
            "Y_d fit a = {:.4} +- {:.4}, b = {:.4} +- {:.4} (both required in [0.9, 1.1])",
            fit.a, fit.a_err, fit.b, fit.b_err
        )];
        let (_, rows) = read_csv(&dir.join(spectrum_file_name(SpectrumKind::Stationary, 0.0)))?;
        let zs: Vec<f64> = rows.iter().map(|r| z(r[1], 1.0, r[2])).collect();
        let zmax = zs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let flat_ok = zs.iter().all(|v| v.abs() < 3.0);
        details.push(format!("X_d: max |V - 1|/stderr = {:.2} over {} frequencies (required < 3)", zmax, zs.len()));
        let g2 = m.params.g * m.params.g;
        let excess = rows.iter().fold(0.0f64, |a, r| a.max((r[1] - 1.0).abs()));
        details.push(format!("X_d: max |V - 1| = {excess:.3e} = {:.4} g^2 (second-order excess absent from the linear theory)", excess / g2));
        let (_, y) = read_csv(&dir.join(spectrum_file_name(SpectrumKind::Stationary, 90.0)))?;
        let yz = y.iter().map(|r| z(r[1], dark_quadrature_spectrum(r[0], FRAC_PI_2), r[2]).abs()).fold(0.0, f64::max);
        details.push(format!("Y_d vs linear theory: max |z| = {yz:.2} (informational)"));
        Ok((fit_ok && flat_ok, details))
    }

    fn criterion5(&mut self) -> Result<(bool, Vec<String>)> {
        let (dir, m) = self.ensemble("fixed", |v| RunConfig::fixed_default(v.trajectories(20_000), 20_240_602))?;
        let p = m.params;
        let t = m.config.window_length()?;
        let (_, r90) = read_csv(&dir.join(spectrum_file_name(SpectrumKind::Windowed, 90.0)))?;
        let (_, r88) = read_csv(&dir.join(spectrum_file_name(SpectrumKind::Windowed, 88.0)))?;
        let (v90, e90) = (r90[0][1], r90[0][2]);
        let (v88, e88) = (r88[0][1], r88[0][2]);
        let theory = fixed_lo_spectrum_with(0.0, FRAC_PI_2, t, p.d(), p.sigma, FixedLoForm::Consistent);
        let doubled = fixed_lo_spectrum_with(0.0, FRAC_PI_2, t, p.d(), p.sigma, FixedLoForm::Doubled);
        let z90 = z(v90, theory, e90);
        let gap = z(v88, v90, e88.hypot(e90));
        let pass = z90.abs() < 3.0 && v88 > v90;
        Ok((
            pass,
            vec![
                format!("d = {:.1e}, T = {t:.3}, kappa = {}", p.d(), p.kappa),
                format!("phi = 90 deg: V = {v90:.5} +- {e90:.5}, theory {theory:.5}, z = {z90:+.2}"),
                format!("doubled leakage term gives {doubled:.5} (z = {:+.2})", z(v90, doubled, e90)),
                format!("phi = 88 deg: V = {v88:.4} +- {e88:.4}, exceeds phi = 90 deg by {gap:.1} standard errors"),
            ],
        ))
    }

    fn criterion7(&mut self) -> Result<(bool, Vec<String>)> {
        let (_, reduced) = self.rotating_run()?;
        let (_, full) = self.ensemble("full", |v| {
            let mut c = RunConfig::rotating_default(v.trajectories(5_000), 20_240_603);
            c.integrator.system = SystemKind::Full;
            c.detection.omega_points = 11;
            c
        })?;
        let sr = reduced.results.theta_slope.ok_or_else(|| OpoError::InsufficientSamples("reduced slope".into()))?;
        let sf = full.results.theta_slope.ok_or_else(|| OpoError::InsufficientSamples("full slope".into()))?;
        let zz = z(sf.fit.slope, sr.fit.slope, sf.slope_stderr.hypot(sr.slope_stderr));
        let asym = full.results.max_conjugate_asymmetry;
        Ok((
            asym < 1e-8 && zz.abs() < 3.0,
            vec![
                format!("full system: max conjugate asymmetry at tau_end = {asym:.2e} (required < 1e-8)"),
                format!(
                    "slope full {:.5} +- {:.5} vs reduced {:.5} +- {:.5}: z = {zz:+.2}",
                    sf.fit.slope, sf.slope_stderr, sr.fit.slope, sr.slope_stderr
                ),
            ],
        ))
    }

    fn criterion9(&mut self) -> Result<(bool, Vec<String>)> {
        let mut details = Vec::new();
        let mut pass = true;
        for (label, base) in [("rotating", small_rotating()), ("fixed", small_fixed())] {
            let mut digests: Vec<Vec<(String, String)>> = Vec::new();
            for workers in [1usize, 4, 16] {
                let mut c = base.clone();
                c.output.dir = self.opts.work_dir.join(format!("determinism-{label}-{workers}"));
                c.output.checkpoint = false;
                c.ensemble.workers = workers;
                let RunOutcome::Finished(m) = run_ensemble(&c, &ExecOptions::default())? else {
                    return Err(OpoError::Config("unexpected partial run".into()));
                };
                digests.push(m.outputs.iter().map(|o| (o.name.clone(), o.sha256.clone())).collect());
            }
            let same = digests.windows(2).all(|w| w[0] == w[1]);
            pass &= same;
            details.push(format!(
                "{label}: {} output files, digests {} across 1, 4, 16 workers",
                digests[0].len(),
                if same { "identical" } else { "DIFFER" }
            ));
        }
        Ok((pass, details))
    }
}

fn small_rotating() -> RunConfig {
    let mut c = RunConfig::rotating_default(48, 99);
    c.model.as_mut().expect("model").g = 0.05;
    c.integrator.dt = 0.01;
    c.integrator.tau_end = 6.0;
    c.ensemble.stationary_cutoff = 2.0;
    c.ensemble.block_size = 3;
    c.detection.max_lag = 2.0;
    c.detection.omega_points = 9;
    c
}

fn small_fixed() -> RunConfig {
    let mut c = small_rotating();
    c.detection.mode = crate::analytics::DetectionMode::Fixed;
    c.detection.phi_deg = vec![88.0, 90.0];
    c.detection.omega = vec![0.0, 0.5];
    c.detection.window_start = 1.0;
    c.detection.t = Some(4.0);
    c
}

pub fn criterion1() -> Result<(bool, Vec<String>)> {
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    for sigma in [1.1, SQRT_2, 2.0, 5.0] {
        let l = linear_matrix(sigma);
        let sym = SymmetricEigen::new(l);
        let closed = eigensystem(sigma)?;
        // generic solver eigenvalues against the closed forms, matched by value
        let mut got: Vec<f64> = sym.eigenvalues.iter().copied().collect();
        let mut want = closed.values.to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        for m in 0..4 {
            let v = closed.vector(m);
            worst = worst.max((l * v - closed.values[m] * v).norm());
        }
    }
    details.push(format!("4x4 eigensystem: max deviation {worst:.2e} (required <= 1e-12)"));
    let mut pass = worst <= 1e-12;
    for (sigma, kappa) in [(SQRT_2, 1.0), (2.0, 10.0), (1.1, 100.0)] {
        let a = analyze_full_linear(sigma, kappa)?;
        let ok = a.goldstone_residual <= 1e-12 && a.dark_phase_residual <= 1e-12;
        pass &= ok;
        details.push(format!(
            "6x6 (sigma {sigma:.4}, kappa {kappa}): |L w0'| = {:.1e}, |L w1' + 2 w1'| = {:.1e}",
            a.goldstone_residual, a.dark_phase_residual
        ));
    }
    Ok((pass, details))
}

pub fn criterion2() -> Result<(bool, Vec<String>)> {
    let sigma = SQRT_2;
    let g = 1e-3;
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        let w = 0.1 * k as f64;
        worst = worst.max((composed_dark_phase_spectrum(w, sigma, g)? - dark_quadrature_spectrum(w, FRAC_PI_2)).abs());
    }
    let mut pass = worst <= 1e-10;
    let mut details = vec![format!("composed dark phase spectrum on [0, 20]: max deviation {worst:.2e} (required <= 1e-10)")];
    for d in [1e-6, 1e-10, 1e-13] {
        let t_num = minimize_detection_time(0.0, FRAC_PI_2, sigma, d, FixedLoForm::Consistent)?;
        let t_opt = optimal_detection_time(sigma, d)?;
        let rel = (t_num / t_opt - 1.0).abs();
        pass &= rel < 0.01;
        details.push(format!("d = {d:.0e}: numeric T = {t_num:.6e}, closed form {t_opt:.6e}, relative {rel:.1e}"));
    }
    Ok((pass, details))
}

/// `dx = -lambda x dt + Gamma dW` with real noise of unit intensity.
struct OrnsteinUhlenbeck {
    lambda: f64,
    gamma: f64,
}

impl Increment<1> for OrnsteinUhlenbeck {
    fn increment(&self, s: &[C; 1], dt: f64, n: &NoiseIncrement) -> [C; 1] {
        [-self.lambda * dt * s[0] + self.gamma * SQRT_2 * n.w.re]
    }
}

/// `dx = mu x dt + s x o dW`.
struct Geometric {
    mu: f64,
    s: f64,
}

impl Increment<1> for Geometric {
    fn increment(&self, x: &[C; 1], dt: f64, n: &NoiseIncrement) -> [C; 1] {
        [self.mu * dt * x[0] + self.s * x[0] * SQRT_2 * n.w.re]
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn criterion6() -> Result<(bool, Vec<String>)> {
    let mut details = Vec::new();
    let mut pass = true;

    // noise increments
    let dt = 3e-3;
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let ws: Vec<C> = (0..n).map(|_| noise_increment(&mut rng, dt).w).collect();
    let checks = [
        ("<Re W>", ws.iter().map(|w| w.re).collect::<Vec<_>>(), 0.0),
        ("<Im W>", ws.iter().map(|w| w.im).collect(), 0.0),
        ("<|W|^2>", ws.iter().map(|w| w.norm_sqr()).collect(), dt),
        ("<Re W^2>", ws.iter().map(|w| (w * w).re).collect(), 0.0),
        ("<Im W^2>", ws.iter().map(|w| (w * w).im).collect(), 0.0),
    ];
    for (name, xs, expected) in checks {
        let (m, e) = mean_and_stderr(&xs);
        let zz = z(m, expected, e);
        pass &= zz.abs() < 3.0;
        details.push(format!("{name} = {m:.4e} (expected {expected:.1e}), z = {zz:+.2}"));
    }
    let rs: Vec<f64> = (0..n).map(|_| gaussian_pair(1.0 - rng.gen::<f64>(), rng.gen::<f64>()).expect("valid inputs")).collect();
    let sq: Vec<f64> = rs.iter().map(|r| r * r).collect();
    let (m, e) = mean_and_stderr(&sq);
    pass &= z(m, 0.5, e).abs() < 3.0;
    details.push(format!("variance of r(z, z') = {m:.5} (expected 0.5), z = {:+.2}", z(m, 0.5, e)));

    // Ornstein-Uhlenbeck stationary variance
    let ou = OrnsteinUhlenbeck { lambda: 1.0, gamma: 0.8 };
    let (dt, steps, paths) = (1e-3, 8_000, 4_000);
    let mut rng = ChaCha8Rng::seed_from_u64(607);
    let finals: Vec<f64> = (0..paths)
        .map(|_| {
            let mut x = [C::new(0.0, 0.0)];
            for _ in 0..steps {
                x = step_semi_implicit(&ou, &x, dt, 2, &noise_increment(&mut rng, dt));
            }
            x[0].re
        })
        .collect();
    let sq: Vec<f64> = finals.iter().map(|x| x * x).collect();
    let (v, e) = mean_and_stderr(&sq);
    let expected = ou.gamma * ou.gamma / (2.0 * ou.lambda) * (1.0 - (-2.0 * ou.lambda * steps as f64 * dt).exp());
    let zz = z(v, expected, e);
    pass &= zz.abs() < 3.0;
    details.push(format!("OU variance = {v:.5} +- {e:.5}, Gamma^2/2lambda = {expected:.5}, z = {zz:+.2}"));

    // Stratonovich versus Ito on geometric noise, pathwise
    let gbm = Geometric { mu: 0.2, s: 0.8 };
    let (dt, steps, paths) = (1e-3, 1_000, 400);
    let t = dt * steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(608);
    let (mut err_strat, mut err_ito, mut err_em) = (0.0, 0.0, 0.0);
    for _ in 0..paths {
        let mut x = [C::new(1.0, 0.0)];
        let mut y = 1.0f64;
        let mut w = 0.0;
        for _ in 0..steps {
            let n = noise_increment(&mut rng, dt);
            x = step_semi_implicit(&gbm, &x, dt, 2, &n);
            let dw = SQRT_2 * n.w.re;
            // Euler-Maruyama on the Ito form with the Stratonovich drift correction
            y += (gbm.mu + 0.5 * gbm.s * gbm.s) * y * dt + gbm.s * y * dw;
            w += dw;
        }
        let strat = gbm.mu * t + gbm.s * w;
        let ito = (gbm.mu - 0.5 * gbm.s * gbm.s) * t + gbm.s * w;
        err_strat += (x[0].re.ln() - strat).abs() / paths as f64;
        err_ito += (x[0].re.ln() - ito).abs() / paths as f64;
        err_em += (y.ln() - strat).abs() / paths as f64;
    }
    let ok = err_strat < 0.01 && err_ito > 0.25 && err_em < 0.05;
    pass &= ok;
    details.push(format!(
        "geometric noise: mean |log error| vs Stratonovich {err_strat:.2e}, vs Ito {err_ito:.3}; drift-corrected Ito scheme vs Stratonovich {err_em:.2e}"
    ));
    Ok((pass, details))
}

pub fn criterion8() -> Result<(bool, Vec<String>)> {
    let dd: f64 = 0.1;
    let paths = 100_000;
    let pairs = [(1.0, 2.0), (3.0, 5.0), (10.0, 10.0), (0.5, 20.0), (8.0, 4.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let normal = |rng: &mut ChaCha8Rng| gaussian_pair(1.0 - rng.gen::<f64>(), rng.gen::<f64>()).expect("valid inputs") * SQRT_2;
    let mut details = Vec::new();
    let mut pass = true;
    for (t1, t2) in pairs {
        let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let mut ss = Vec::with_capacity(paths);
        let mut cc = Vec::with_capacity(paths);
        for _ in 0..paths {
            let th_a = (dd * a).sqrt() * normal(&mut rng);
            let th_b = th_a + (dd * (b - a)).sqrt() * normal(&mut rng);
            ss.push(th_a.sin() * th_b.sin());
            cc.push(th_a.cos() * th_b.cos());
        }
        let (s_exp, c_exp) = wiener_trig_correlations(t1, t2, dd);
        let (s, se) = mean_and_stderr(&ss);
        let (c, ce) = mean_and_stderr(&cc);
        let (zs, zc) = (z(s, s_exp, se), z(c, c_exp, ce));
        pass &= zs.abs() < 3.0 && zc.abs() < 3.0;
        details.push(format!("(tau1, tau2) = ({t1}, {t2}): S = {s:.5} vs {s_exp:.5} (z {zs:+.2}), C = {c:.5} vs {c_exp:.5} (z {zc:+.2})"));
    }
    Ok((pass, details))
}

/// Run the listed criteria (all when empty) in `work_dir`.
pub fn validate(ids: &[u8], opts: ValidationOptions) -> Vec<CriterionResult> {
    let mut v = Validator::new(opts);
    if ids.is_empty() {
        v.run_all()
    } else {
        ids.iter().map(|&i| v.run(i)).collect()
    }
}

/// Default working directory for validation ensembles.
pub fn default_work_dir() -> PathBuf {
    std::env::temp_dir().join("opo-validate")
}

pub fn report(results: &[CriterionResult], verbose: bool) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&r.line());
        s.push('\n');
        if verbose {
            for d in &r.details {
                s.push_str("    ");
                s.push_str(d);
                s.push('\n');
            }
        }
    }
    s
}

pub fn all_pass(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        for (id, r) in [(1, criterion1()), (2, criterion2()), (8, criterion8())] {
            let (pass, details) = r.unwrap();
            assert!(pass, "criterion {id}: {details:?}");
        }
    }
}
