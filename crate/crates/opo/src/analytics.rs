//! Closed-form results of the linearized theory.
//!
//! Frequencies `omega` and times are in units of `gamma_s` and `1/gamma_s`.
//! Spectra are normalized so that vacuum noise equals 1.

use crate::error::{OpoError, Result};
use nalgebra::{Matrix4, SMatrix, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    /// Local oscillator follows the pattern orientation.
    #[default]
    Rotating,
    /// Local oscillator frozen at the initial orientation.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Local oscillator phase (rad).
    pub phi: f64,
    /// Detection window length.
    #[serde(rename = "T")]
    pub t: f64,
    pub mode: DetectionMode,
}

impl DetectionConfig {
    pub fn new(phi: f64, t: f64, mode: DetectionMode) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(OpoError::InvalidParameter(format!("detection time T must be positive, got {t}")));
        }
        Ok(DetectionConfig { phi, t, mode })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub v_out: Vec<f64>,
    /// Standard errors; empty for closed-form results.
    pub err: Vec<f64>,
    pub meta: serde_json::Value,
}

fn require_above(sigma: f64) -> Result<()> {
    if sigma > 1.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(OpoError::BelowThreshold(sigma))
    }
}

/// Noise level in decibels, `10 log10 V`, with `V` clamped at `1e-300`.
pub fn to_db(v: f64) -> f64 {
    10.0 * v.max(1e-300).log10()
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Signal-fluctuation matrix of the adiabatic linear theory, basis `(b+, b+^+, b-, b-^+)`.
pub fn linear_matrix(sigma: f64) -> Matrix4<f64> {
    let s = sigma;
    let r2 = sigma - 1.0;
    -Matrix4::new(
        s, 0.0, r2, -1.0, //
        0.0, s, -1.0, r2, //
        r2, -1.0, s, 0.0, //
        -1.0, r2, 0.0, s,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigensystem4 {
    pub values: [f64; 4],
    /// `vectors[m]` is the eigenvector for `values[m]`.
    pub vectors: [[f64; 4]; 4],
}

impl Eigensystem4 {
    pub fn vector(&self, m: usize) -> Vector4<f64> {
        Vector4::from(self.vectors[m])
    }
}

/// Goldstone, dark-phase, bright-amplitude and bright-phase eigenpairs.
pub fn eigensystem(sigma: f64) -> Result<Eigensystem4> {
    require_above(sigma)?;
    Ok(Eigensystem4 {
        values: [0.0, -2.0, -2.0 * (sigma - 1.0), -2.0 * sigma],
        vectors: [
            [0.5, -0.5, -0.5, 0.5],
            [0.5, 0.5, -0.5, -0.5],
            [0.5, 0.5, 0.5, 0.5],
            [0.5, -0.5, 0.5, -0.5],
        ],
    })
}

/// Orientation variance `D tau` of the freely diffusing pattern.
pub fn orientation_variance(tau: f64, sigma: f64, g: f64) -> Result<f64> {
    require_above(sigma)?;
    if !(tau >= 0.0) {
        return Err(OpoError::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    Ok(g * g / 4.0 / (sigma - 1.0) * tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightDarkSpectra {
    pub x_bright: f64,
    pub y_bright: f64,
    pub x_dark: f64,
    pub y_dark: f64,
}

pub fn bright_dark_spectra(omega: f64, sigma: f64) -> Result<BrightDarkSpectra> {
    require_above(sigma)?;
    let q = omega * omega / 4.0;
    let r2 = sigma - 1.0;
    Ok(BrightDarkSpectra {
        x_bright: 1.0 + 1.0 / (r2 * r2 + q),
        y_bright: 1.0 - 1.0 / (sigma * sigma + q),
        x_dark: 1.0,
        y_dark: 1.0 - 1.0 / (1.0 + q),
    })
}

/// Rotating-frame dark quadrature spectrum at LO phase `phi`.
pub fn dark_quadrature_spectrum(omega: f64, phi: f64) -> f64 {
    let s = phi.sin();
    1.0 - s * s / (1.0 + omega * omega / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    C1,
    C2,
    C3,
}

impl Projection {
    pub fn from_index(m: u8) -> Result<Self> {
        match m {
            1 => Ok(Projection::C1),
            2 => Ok(Projection::C2),
            3 => Ok(Projection::C3),
            _ => Err(OpoError::InvalidParameter(format!("projection index must be 1, 2 or 3, got {m}"))),
        }
    }

    /// Decay rate `lambda` and squared noise amplitude `Gamma^2` of the projection.
    fn rate_and_strength(self, sigma: f64, g: f64) -> (f64, f64) {
        let g2 = g * g;
        match self {
            Projection::C1 => (2.0, -g2),
            Projection::C2 => (2.0 * (sigma - 1.0), g2),
            Projection::C3 => (2.0 * sigma, g2),
        }
    }
}

fn check_projection(m: Projection, sigma: f64) -> Result<()> {
    match m {
        Projection::C2 => require_above(sigma),
        _ if sigma > 0.0 => Ok(()),
        _ => Err(OpoError::InvalidParameter(format!("sigma must be positive, got {sigma}"))),
    }
}

/// Stationary two-time correlation `<c_m(tau) c_m(tau + dtau)>`.
pub fn projection_correlation(m: Projection, dtau: f64, sigma: f64, g: f64) -> Result<f64> {
    check_projection(m, sigma)?;
    let (lambda, gamma2) = m.rate_and_strength(sigma, g);
    Ok(gamma2 / (2.0 * lambda) * (-lambda * dtau.abs()).exp())
}

/// Fourier transform of [`projection_correlation`].
pub fn projection_spectrum(m: Projection, omega: f64, sigma: f64, g: f64) -> Result<f64> {
    check_projection(m, sigma)?;
    let (lambda, gamma2) = m.rate_and_strength(sigma, g);
    Ok(gamma2 / (lambda * lambda + omega * omega))
}

/// `(S, C) = (<sin th1 sin th2>, <cos th1 cos th2>)` for a Wiener orientation with `th(0) = 0`.
pub fn wiener_trig_correlations(tau1: f64, tau2: f64, diffusion: f64) -> (f64, f64) {
    let damp = (-0.5 * diffusion * (tau1 + tau2)).exp();
    let m = diffusion * tau1.min(tau2);
    (damp * m.sinh(), damp * m.cosh())
}

/// Coefficient of the orientation-leakage term in the phase-quadrature part
/// of the fixed-LO spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FixedLoForm {
    /// Leakage coefficient `4 d T`; minimum over `T` lies at `T_opt` with `V = 1/T_opt`.
    #[default]
    Consistent,
    /// Leakage coefficient `8 d T`; its minimum over `T` lies at `T_opt / sqrt(2)`.
    Doubled,
}

fn leakage_coefficient(form: FixedLoForm) -> f64 {
    match form {
        FixedLoForm::Consistent => 4.0,
        FixedLoForm::Doubled => 8.0,
    }
}

/// Amplitude-quadrature part `S^0` of the fixed-LO spectrum (small-`d` form).
///
/// The large-`T` expression holds for `omega >> sqrt(D/T)`; at `omega == 0`
/// the direct small-`d` limit `4T^2/3 - 5DT^3/6 + DT/(2(sigma-1)^2)` is returned.
pub fn fixed_lo_s0(omega: f64, t: f64, d: f64, sigma: f64) -> f64 {
    let r2 = sigma - 1.0;
    let dd = d / r2;
    if omega == 0.0 {
        return 4.0 * t * t / 3.0 - 5.0 * dd * t.powi(3) / 6.0 + dd * t / (2.0 * r2 * r2);
    }
    let w2 = omega * omega;
    let x = omega * t;
    let rotation = if x.abs() < 1e-3 {
        let x2 = x * x;
        8.0 * t * t * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0)
    } else {
        8.0 / w2 * (1.0 - sinc(x))
    };
    rotation - 4.0 * d * t / (w2 * r2) * (6.0 * r2 * r2 + w2) / (4.0 * r2 * r2 + w2)
}

/// Phase-quadrature part `S^{pi/2}` of the fixed-LO spectrum (small-`d` form).
pub fn fixed_lo_s_half_pi(omega: f64, t: f64, d: f64, sigma: f64, form: FixedLoForm) -> f64 {
    let w2 = omega * omega;
    let a = 4.0 + w2;
    (8.0 - 2.0 * w2) / (t * a * a) - 4.0 / a
        + leakage_coefficient(form) * d * t * (2.0 * (sigma * sigma + 1.0) + w2)
            / ((sigma - 1.0) * a * (4.0 * sigma * sigma + w2))
}

/// Windowed noise spectrum of the quadrature of a fixed TEM01 mode.
pub fn fixed_lo_spectrum_with(omega: f64, phi: f64, t: f64, d: f64, sigma: f64, form: FixedLoForm) -> f64 {
    let c2 = phi.cos().powi(2);
    let s2 = phi.sin().powi(2);
    let mut v = 1.0;
    if c2 > 1e-30 {
        v += c2 * fixed_lo_s0(omega, t, d, sigma);
    }
    if s2 > 0.0 {
        v += s2 * fixed_lo_s_half_pi(omega, t, d, sigma, form);
    }
    v
}

pub fn fixed_lo_spectrum(omega: f64, config: &DetectionConfig, d: f64, sigma: f64) -> Result<f64> {
    require_above(sigma)?;
    if !(d > 0.0) {
        return Err(OpoError::InvalidParameter(format!("d must be positive, got {d}")));
    }
    if !(config.t > 0.0) {
        return Err(OpoError::InvalidParameter(format!("T must be positive, got {}", config.t)));
    }
    Ok(fixed_lo_spectrum_with(omega, config.phi, config.t, d, sigma, FixedLoForm::default()))
}

/// Fixed-LO spectrum assembled directly from the two-time correlation of the
/// fixed-mode quadrature, `(2/(g^2 T)) sum w_i w_j K(t_i, t_j) cos(omega (t_i - t_j))`,
/// with trapezoid weights on a grid of spacing close to `h`.
pub fn fixed_lo_spectrum_composed(omega: f64, phi: f64, t: f64, d: f64, sigma: f64, h: f64) -> Result<f64> {
    require_above(sigma)?;
    if !(t > 0.0 && h > 0.0 && d > 0.0) {
        return Err(OpoError::InvalidParameter("T, h and d must be positive".into()));
    }
    let n = (t / h).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let r2 = sigma - 1.0;
    let dd = d / r2;
    let g2 = 4.0 * d;
    let (c2, s2) = (phi.cos().powi(2), phi.sin().powi(2));
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let w = |i: usize| if i == 0 || i == n { 0.5 * h } else { h };
    // lag-only factors
    let lag: Vec<(f64, f64, f64, f64)> = (0..=n)
        .map(|k| {
            let u = k as f64 * h;
            (
                -g2 / 4.0 * (-2.0 * u).exp(),
                g2 / (4.0 * r2) * (-2.0 * r2 * u).exp(),
                g2 / (4.0 * sigma) * (-2.0 * sigma * u).exp(),
                (omega * u).cos(),
            )
        })
        .collect();
    let mut acc = 0.0;
    for i in 0..=n {
        for j in 0..=i {
            let (s, c) = wiener_trig_correlations(times[i], times[j], dd);
            let (k1, k2, k3, cw) = lag[i - j];
            let k = 2.0 * c2 * s * (4.0 * r2 + k2) + 2.0 * s2 * (k1 * c - k3 * s);
            let mult = if i == j { 1.0 } else { 2.0 };
            acc += mult * w(i) * w(j) * k * cw;
        }
    }
    Ok(1.0 + 2.0 / (g2 * t) * acc)
}

/// Detection time minimizing the zero-frequency phase-quadrature noise.
pub fn optimal_detection_time(sigma: f64, d: f64) -> Result<f64> {
    require_above(sigma)?;
    if !(d > 0.0) {
        return Err(OpoError::InvalidParameter(format!("d must be positive, got {d}")));
    }
    Ok((sigma * sigma * (sigma - 1.0) / (d * (sigma * sigma + 1.0))).sqrt())
}

/// Golden-section minimization of `f` on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    if !(a < b && tol > 0.0) {
        return Err(OpoError::Minimizer(format!("invalid bracket [{a}, {b}] or tolerance {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            let x = 0.5 * (a + b);
            return if f(x).is_finite() {
                Ok(x)
            } else {
                Err(OpoError::Minimizer(format!("objective is not finite at {x}")))
            };
        }
        if !(fc.is_finite() && fd.is_finite()) {
            return Err(OpoError::Minimizer(format!("objective is not finite near {c}")));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(OpoError::Minimizer("golden section did not converge in 500 iterations".into()))
}

/// Scan `grid`, bracket the smallest sample, then refine by golden section.
pub fn bracketed_min<F: Fn(f64) -> f64>(f: F, grid: &[f64], tol: f64) -> Result<f64> {
    if grid.len() < 3 {
        return Err(OpoError::Minimizer("scan grid needs at least 3 points".into()));
    }
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    if !best_v.is_finite() {
        return Err(OpoError::Minimizer("objective not finite anywhere on the scan grid".into()));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    golden_section_min(f, lo, hi, tol)
}

/// Noise frequency in `(0, 10]` minimizing the fixed-LO spectrum at `T = T_opt`.
pub fn optimal_noise_frequency(phi: f64, sigma: f64, d: f64) -> Result<f64> {
    let t = optimal_detection_time(sigma, d)?;
    let n = 20_000;
    let grid: Vec<f64> = (0..=n).map(|i| 10.0 * i as f64 / n as f64).collect();
    let f = |w: f64| fixed_lo_spectrum_with(w.max(0.0), phi, t, d, sigma, FixedLoForm::default());
    bracketed_min(f, &grid, 1e-6)
}

/// Numerical minimizer over the detection time of the fixed-LO spectrum, scanning `T` on a log grid.
pub fn minimize_detection_time(omega: f64, phi: f64, sigma: f64, d: f64, form: FixedLoForm) -> Result<f64> {
    require_above(sigma)?;
    let grid: Vec<f64> = (0..=1200).map(|i| 10f64.powf(-2.0 + 12.0 * i as f64 / 1200.0)).collect();
    bracketed_min(|t| fixed_lo_spectrum_with(omega, phi, t.max(1e-300), d, sigma, form), &grid, 1e-9)
        .and_then(|t| {
            // refine in relative terms for large T
            let lo = t * 0.98;
            let hi = t * 1.02;
            golden_section_min(|x| fixed_lo_spectrum_with(omega, phi, x, d, sigma, form), lo, hi, t * 1e-10)
        })
}

/// Linearized six-amplitude matrix including pump fluctuations,
/// basis `(b0, b0^+, b+, b+^+, b-, b-^+)`.
pub fn full_linear_matrix(sigma: f64, kappa: f64) -> Result<SMatrix<f64, 6, 6>> {
    require_above(sigma)?;
    if !(kappa > 0.0) {
        return Err(OpoError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let r = (sigma - 1.0).sqrt();
    let k = kappa;
    #[rustfmt::skip]
    let m = SMatrix::<f64, 6, 6>::from_row_slice(&[
        -k, 0.0, -r, 0.0, -r, 0.0,
        0.0, -k, 0.0, -r, 0.0, -r,
        r, 0.0, -1.0, 0.0, 0.0, 1.0,
        0.0, r, 0.0, -1.0, 1.0, 0.0,
        r, 0.0, 0.0, 1.0, -1.0, 0.0,
        0.0, r, 1.0, 0.0, 0.0, -1.0,
    ]);
    Ok(m)
}

pub const GOLDSTONE_FULL: [f64; 6] = [0.0, 0.0, 0.5, -0.5, -0.5, 0.5];
pub const DARK_PHASE_FULL: [f64; 6] = [0.0, 0.0, 0.5, 0.5, -0.5, -0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullLinearAnalysis {
    pub sigma: f64,
    pub kappa: f64,
    /// `|| L w0' ||`.
    pub goldstone_residual: f64,
    /// `|| L w1' + 2 w1' ||`.
    pub dark_phase_residual: f64,
    /// All six eigenvalues, sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
}

pub fn analyze_full_linear(sigma: f64, kappa: f64) -> Result<FullLinearAnalysis> {
    let m = full_linear_matrix(sigma, kappa)?;
    let w0 = SMatrix::<f64, 6, 1>::from_column_slice(&GOLDSTONE_FULL);
    let w1 = SMatrix::<f64, 6, 1>::from_column_slice(&DARK_PHASE_FULL);
    let goldstone_residual = (m * w0).norm();
    let dark_phase_residual = (m * w1 + 2.0 * w1).norm();
    let mut eigenvalues: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(FullLinearAnalysis { sigma, kappa, goldstone_residual, dark_phase_residual, eigenvalues })
}

/// Poisson bracket `{f, h} = (1/i) sum_m (df/db_m dh/db_m* - df/db_m* dh/db_m)`
/// of two real phase-space functions, by central differences of the Wirtinger derivatives.
pub fn poisson_bracket<F, H>(f: F, h: H, z: &[Complex64]) -> f64
where
    F: Fn(&[Complex64]) -> f64,
    H: Fn(&[Complex64]) -> f64,
{
    let wirtinger = |fun: &dyn Fn(&[Complex64]) -> f64, k: usize| -> (Complex64, Complex64) {
        let step = 1e-6 * z[k].norm().max(1e-3);
        let mut zz = z.to_vec();
        let mut probe = |dz: Complex64| {
            zz[k] = z[k] + dz;
            let a = fun(&zz);
            zz[k] = z[k] - dz;
            let b = fun(&zz);
            zz[k] = z[k];
            (a - b) / (2.0 * step)
        };
        let dx = probe(Complex64::new(step, 0.0));
        let dy = probe(Complex64::new(0.0, step));
        (Complex64::new(dx, -dy) * 0.5, Complex64::new(dx, dy) * 0.5)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..z.len() {
        let (fb, fbc) = wirtinger(&f, k);
        let (hb, hbc) = wirtinger(&h, k);
        acc += fb * hbc - fbc * hb;
    }
    (acc / Complex64::i()).re
}

/// Classical orientation `theta = arg(b+* b-)/2`.
pub fn classical_theta(beta_plus: Complex64, beta_minus: Complex64) -> f64 {
    0.5 * (beta_plus.conj() * beta_minus).arg()
}

/// Classical rotating dark quadrature `X_d^phi`.
pub fn classical_dark_quadrature(beta_plus: Complex64, beta_minus: Complex64, phi: f64) -> f64 {
    let th = classical_theta(beta_plus, beta_minus);
    let inner = Complex64::from_polar(1.0, th) * beta_plus - Complex64::from_polar(1.0, -th) * beta_minus;
    2.0 * (Complex64::i() / 2f64.sqrt() * Complex64::from_polar(1.0, -phi) * inner).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    /// `{X_d^phi, X_d^{phi + pi/2}}`.
    pub xx: f64,
    /// `{X_d^phi, theta}`.
    pub x_theta: f64,
}

pub fn poisson_brackets(beta_plus: Complex64, beta_minus: Complex64, phi: f64) -> Result<Brackets> {
    if beta_plus.norm() == 0.0 || beta_minus.norm() == 0.0 {
        return Err(OpoError::ZeroAmplitude);
    }
    let z = [beta_plus, beta_minus];
    let x = move |p: f64| move |v: &[Complex64]| classical_dark_quadrature(v[0], v[1], p);
    let th = |v: &[Complex64]| classical_theta(v[0], v[1]);
    Ok(Brackets {
        xx: poisson_bracket(x(phi), x(phi + std::f64::consts::FRAC_PI_2), &z),
        x_theta: poisson_bracket(x(phi), th, &z),
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(mid + 0.5 * h * xi);
        }
    }
    acc * 0.5 * h
}

/// Dark phase-quadrature spectrum assembled by numerically Fourier transforming
/// `2 <c1 c1>` and applying the `1 + (2/g^2) (...)` normalization.
pub fn composed_dark_phase_spectrum(omega: f64, sigma: f64, g: f64) -> Result<f64> {
    let corr = |u: f64| 2.0 * projection_correlation(Projection::C1, u, sigma, g).unwrap_or(f64::NAN);
    // even integrand: 2 * int_0^inf corr(u) cos(omega u) du; tail below 1e-17 beyond u = 20
    let ft = 2.0 * integrate(|u| corr(u) * (omega * u).cos(), 0.0, 20.0, 400, 16);
    if !ft.is_finite() {
        return Err(OpoError::InvalidParameter("sigma out of range".into()));
    }
    Ok(1.0 + 2.0 / (g * g) * ft)
}
