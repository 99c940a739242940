//! Positive-P Langevin dynamics and the semi-implicit midpoint integrator.
//!
//! Equations are read in the Stratonovich sense; the midpoint scheme
//! converges to Stratonovich solutions, so no drift correction is applied.

use crate::classical::SteadyState;
use crate::error::{OpoError, Result};
use crate::params::DimensionlessParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Six positive-P amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub beta0: C,
    pub beta0_plus: C,
    pub beta_p1: C,
    pub beta_p1_plus: C,
    pub beta_m1: C,
    pub beta_m1_plus: C,
}

impl FieldState {
    /// Lift a classical fixed point to the doubled phase space (`beta^+ = beta*`).
    pub fn from_steady_state(s: &SteadyState) -> Self {
        FieldState {
            beta0: s.beta0,
            beta0_plus: s.beta0.conj(),
            beta_p1: s.beta_plus,
            beta_p1_plus: s.beta_plus.conj(),
            beta_m1: s.beta_minus,
            beta_m1_plus: s.beta_minus.conj(),
        }
    }

    pub fn to_array(&self) -> [C; 6] {
        [self.beta0, self.beta0_plus, self.beta_p1, self.beta_p1_plus, self.beta_m1, self.beta_m1_plus]
    }

    pub fn from_array(a: &[C; 6]) -> Self {
        FieldState {
            beta0: a[0],
            beta0_plus: a[1],
            beta_p1: a[2],
            beta_p1_plus: a[3],
            beta_m1: a[4],
            beta_m1_plus: a[5],
        }
    }

    /// Largest deviation from `(beta_-, beta_-^+) = (beta_+*, [beta_+^+]*)`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (self.beta_m1 - self.beta_p1.conj()).norm().max((self.beta_m1_plus - self.beta_p1_plus.conj()).norm())
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Discrete complex noise increments for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseIncrement {
    pub w: C,
    pub w_plus: C,
}

impl NoiseIncrement {
    pub const ZERO: NoiseIncrement = NoiseIncrement { w: ZERO, w_plus: ZERO };
}

/// `sqrt(-ln z) cos(2 pi z')`, a real sample of variance 1/2 for uniform inputs.
pub fn gaussian_pair(z: f64, z_prime: f64) -> Result<f64> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(OpoError::InvalidParameter(format!("z must lie in (0, 1], got {z}")));
    }
    if !(0.0..1.0).contains(&z_prime) {
        return Err(OpoError::InvalidParameter(format!("z' must lie in [0, 1), got {z_prime}")));
    }
    Ok(gaussian_pair_unchecked(z, z_prime))
}

#[inline(always)]
fn gaussian_pair_unchecked(z: f64, z_prime: f64) -> f64 {
    (-z.ln()).sqrt() * (2.0 * PI * z_prime).cos()
}

#[inline(always)]
fn draw_r<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // gen::<f64>() is uniform on [0, 1); 1 - u is on (0, 1]
    let z = 1.0 - rng.gen::<f64>();
    let zp = rng.gen::<f64>();
    gaussian_pair_unchecked(z, zp)
}

/// One complex increment `sqrt(dt) (r + i r')`.
#[inline(always)]
pub fn complex_increment<R: Rng + ?Sized>(rng: &mut R, sqrt_dt: f64) -> C {
    let re = draw_r(rng);
    let im = draw_r(rng);
    C::new(sqrt_dt * re, sqrt_dt * im)
}

pub fn noise_increment<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> NoiseIncrement {
    let s = dt.sqrt();
    let w = complex_increment(rng, s);
    let w_plus = complex_increment(rng, s);
    NoiseIncrement { w, w_plus }
}

/// Random stream of trajectory `k`, a pure function of `(master_seed, k)`.
pub fn trajectory_rng(master_seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(k);
    rng
}

/// Principal square root, argument in `(-pi/2, pi/2]`; the negative real axis maps to `+i`.
#[inline(always)]
pub fn principal_sqrt(z: C) -> C {
    let (x, y) = (z.re, z.im);
    let r = x.hypot(y);
    if r == 0.0 {
        return ZERO;
    }
    let t = (0.5 * (r + x.abs())).sqrt();
    if x >= 0.0 {
        C::new(t, y / (2.0 * t))
    } else {
        C::new(y.abs() / (2.0 * t), if y >= 0.0 { t } else { -t })
    }
}

/// Signal amplitudes `(beta_+, beta_+^+, beta_-, beta_-^+)` seen by observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub bp: C,
    pub bp_plus: C,
    pub bm: C,
    pub bm_plus: C,
}

/// Stochastic system `d beta = A(beta) dt + B(beta) . dW` on an `N`-component state.
pub trait Increment<const N: usize>: Sync {
    /// `dt A(s) + B(s) . W`.
    fn increment(&self, s: &[C; N], dt: f64, noise: &NoiseIncrement) -> [C; N];
}

/// An [`Increment`] whose state carries the OPO signal and pump amplitudes.
pub trait Model<const N: usize>: Increment<N> {
    fn signal(&self, s: &[C; N]) -> Signal;
    /// Pump amplitudes entering the noise square roots.
    fn pump(&self, s: &[C; N]) -> (C, C);
    fn state_from_field(&self, f: &FieldState) -> [C; N];
    fn to_field(&self, s: &[C; N]) -> FieldState;
}

/// Six-equation system with explicit pump dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModel {
    pub p: DimensionlessParams,
}

/// Four-equation system on the conjugate-symmetric manifold, state `(beta0, beta0^+, beta_+, beta_+^+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedModel {
    pub p: DimensionlessParams,
}

/// Pump adiabatically eliminated, state `(beta_+, beta_+^+, beta_-, beta_-^+)`,
/// Stratonovich form with the `g^2/4` damping correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticModel {
    pub p: DimensionlessParams,
}

impl FullModel {
    pub fn drift(&self, s: &[C; 6]) -> [C; 6] {
        self.increment(s, 1.0, &NoiseIncrement::ZERO)
    }

    /// Noise coefficients multiplying `(zeta, zeta^+, zeta*, [zeta^+]*)` on the four signal lines.
    pub fn diffusion(&self, s: &[C; 6]) -> [C; 4] {
        let a = self.p.g * principal_sqrt(s[0]);
        let b = self.p.g * principal_sqrt(s[1]);
        [a, b, a, b]
    }
}

impl Increment<6> for FullModel {
    #[inline(always)]
    fn increment(&self, s: &[C; 6], dt: f64, n: &NoiseIncrement) -> [C; 6] {
        let DimensionlessParams { sigma, kappa, g } = self.p;
        let [b0, b0p, bp, bpp, bm, bmp] = *s;
        let na = g * principal_sqrt(b0);
        let nb = g * principal_sqrt(b0p);
        [
            dt * kappa * (sigma - b0 - bp * bm),
            dt * kappa * (sigma - b0p - bpp * bmp),
            dt * (-bp + b0 * bmp) + na * n.w,
            dt * (-bpp + b0p * bm) + nb * n.w_plus,
            dt * (-bm + b0 * bpp) + na * n.w.conj(),
            dt * (-bmp + b0p * bp) + nb * n.w_plus.conj(),
        ]
    }
}

impl Model<6> for FullModel {

    fn signal(&self, s: &[C; 6]) -> Signal {
        Signal { bp: s[2], bp_plus: s[3], bm: s[4], bm_plus: s[5] }
    }

    fn pump(&self, s: &[C; 6]) -> (C, C) {
        (s[0], s[1])
    }

    fn state_from_field(&self, f: &FieldState) -> [C; 6] {
        f.to_array()
    }

    fn to_field(&self, s: &[C; 6]) -> FieldState {
        FieldState::from_array(s)
    }
}

impl Increment<4> for ReducedModel {
    #[inline(always)]
    fn increment(&self, s: &[C; 4], dt: f64, n: &NoiseIncrement) -> [C; 4] {
        let DimensionlessParams { sigma, kappa, g } = self.p;
        let [b0, b0p, bp, bpp] = *s;
        [
            dt * kappa * (sigma - b0 - bp.norm_sqr()),
            dt * kappa * (sigma - b0p - bpp.norm_sqr()),
            dt * (-bp + b0 * bpp.conj()) + g * principal_sqrt(b0) * n.w,
            dt * (-bpp + b0p * bp.conj()) + g * principal_sqrt(b0p) * n.w_plus,
        ]
    }
}

impl Model<4> for ReducedModel {

    fn signal(&self, s: &[C; 4]) -> Signal {
        Signal { bp: s[2], bp_plus: s[3], bm: s[2].conj(), bm_plus: s[3].conj() }
    }

    fn pump(&self, s: &[C; 4]) -> (C, C) {
        (s[0], s[1])
    }

    fn state_from_field(&self, f: &FieldState) -> [C; 4] {
        [f.beta0, f.beta0_plus, f.beta_p1, f.beta_p1_plus]
    }

    fn to_field(&self, s: &[C; 4]) -> FieldState {
        FieldState {
            beta0: s[0],
            beta0_plus: s[1],
            beta_p1: s[2],
            beta_p1_plus: s[3],
            beta_m1: s[2].conj(),
            beta_m1_plus: s[3].conj(),
        }
    }
}

impl AdiabaticModel {
    pub fn drift(&self, s: &[C; 4]) -> [C; 4] {
        self.increment(s, 1.0, &NoiseIncrement::ZERO)
    }
}

impl Increment<4> for AdiabaticModel {
    #[inline(always)]
    fn increment(&self, s: &[C; 4], dt: f64, n: &NoiseIncrement) -> [C; 4] {
        let DimensionlessParams { sigma, g, .. } = self.p;
        let [bp, bpp, bm, bmp] = *s;
        let b0 = sigma - bp * bm;
        let b0p = sigma - bpp * bmp;
        let damp = 1.0 - g * g / 4.0;
        let na = g * principal_sqrt(b0);
        let nb = g * principal_sqrt(b0p);
        [
            dt * (-damp * bp + b0 * bmp) + na * n.w,
            dt * (-damp * bpp + b0p * bm) + nb * n.w_plus,
            dt * (-damp * bm + b0 * bpp) + na * n.w.conj(),
            dt * (-damp * bmp + b0p * bp) + nb * n.w_plus.conj(),
        ]
    }
}

impl Model<4> for AdiabaticModel {

    fn signal(&self, s: &[C; 4]) -> Signal {
        Signal { bp: s[0], bp_plus: s[1], bm: s[2], bm_plus: s[3] }
    }

    fn pump(&self, s: &[C; 4]) -> (C, C) {
        (self.p.sigma - s[0] * s[2], self.p.sigma - s[1] * s[3])
    }

    fn state_from_field(&self, f: &FieldState) -> [C; 4] {
        [f.beta_p1, f.beta_p1_plus, f.beta_m1, f.beta_m1_plus]
    }

    fn to_field(&self, s: &[C; 4]) -> FieldState {
        let (b0, b0p) = self.pump(s);
        FieldState { beta0: b0, beta0_plus: b0p, beta_p1: s[0], beta_p1_plus: s[1], beta_m1: s[2], beta_m1_plus: s[3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Full,
    Adiabatic,
    #[default]
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Number of steps `N`; `tau_end = N dt`.
    pub steps: u64,
    pub midpoint_iterations: u32,
    pub system: SystemKind,
}

impl IntegratorConfig {
    /// Build from `(dt, tau_end)`, requiring `tau_end / dt` to be an integer.
    pub fn from_tau_end(dt: f64, tau_end: f64, midpoint_iterations: u32, system: SystemKind) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(OpoError::Config(format!("dt must be positive, got {dt}")));
        }
        if !(tau_end > 0.0 && tau_end.is_finite()) {
            return Err(OpoError::Config(format!("tau_end must be positive, got {tau_end}")));
        }
        if midpoint_iterations < 1 {
            return Err(OpoError::Config("midpoint_iterations must be at least 1".into()));
        }
        let n = (tau_end / dt).round();
        if n < 1.0 || (n * dt - tau_end).abs() > 1e-9 * tau_end {
            return Err(OpoError::Config(format!("tau_end = {tau_end} is not an integer multiple of dt = {dt}")));
        }
        Ok(IntegratorConfig { dt, steps: n as u64, midpoint_iterations, system })
    }

    pub fn tau_end(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

#[inline(always)]
fn add<const N: usize>(a: &[C; N], b: &[C; N], scale: f64) -> [C; N] {
    let mut out = *a;
    for i in 0..N {
        out[i] += scale * b[i];
    }
    out
}

/// One semi-implicit step: `p` midpoint iterations, then a full step from the midpoint.
#[inline(always)]
pub fn step_semi_implicit<M: Increment<N>, const N: usize>(
    model: &M,
    state: &[C; N],
    dt: f64,
    iterations: u32,
    noise: &NoiseIncrement,
) -> [C; N] {
    let mut mid = *state;
    for _ in 0..iterations {
        let inc = model.increment(&mid, dt, noise);
        mid = add(state, &inc, 0.5);
    }
    let inc = model.increment(&mid, dt, noise);
    add(state, &inc, 1.0)
}

/// Receives the state after every step (and once at `tau = 0`, `step = 0`).
pub trait Observer<const N: usize> {
    fn observe(&mut self, step: u64, tau: f64, signal: &Signal, state: &[C; N]);
}

impl<const N: usize, F: FnMut(u64, f64, &Signal, &[C; N])> Observer<N> for F {
    fn observe(&mut self, step: u64, tau: f64, signal: &Signal, state: &[C; N]) {
        self(step, tau, signal, state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrajectoryStatus {
    Completed,
    Diverged { step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub status: TrajectoryStatus,
    /// Steps with a pump amplitude in the left half-plane, where the square-root branch matters.
    pub branch_cut_steps: u64,
}

/// Amplitude magnitude treated as a runaway trajectory.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Integrate one trajectory, streaming every state to `observer`.
pub fn integrate_trajectory<M, O, R, const N: usize>(
    model: &M,
    initial: &FieldState,
    config: &IntegratorConfig,
    rng: &mut R,
    observer: &mut O,
) -> TrajectoryOutcome
where
    M: Model<N>,
    O: Observer<N>,
    R: Rng + ?Sized,
{
    let mut s = model.state_from_field(initial);
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    observer.observe(0, 0.0, &model.signal(&s), &s);
    let mut branch_cut_steps = 0;
    for step in 1..=config.steps {
        let noise = NoiseIncrement { w: complex_increment(rng, sqrt_dt), w_plus: complex_increment(rng, sqrt_dt) };
        s = step_semi_implicit(model, &s, dt, config.midpoint_iterations, &noise);
        let mut bad = false;
        for c in &s {
            let m = c.re.abs().max(c.im.abs());
            // NaN fails every comparison
            if !(m < DIVERGENCE_BOUND) {
                bad = true;
            }
        }
        if bad {
            return TrajectoryOutcome { status: TrajectoryStatus::Diverged { step }, branch_cut_steps };
        }
        let (p0, p1) = model.pump(&s);
        if p0.re < 0.0 || p1.re < 0.0 {
            branch_cut_steps += 1;
        }
        observer.observe(step, step as f64 * dt, &model.signal(&s), &s);
    }
    TrajectoryOutcome { status: TrajectoryStatus::Completed, branch_cut_steps }
}

/// Like [`integrate_trajectory`] but reports divergence as an error carrying the indices.
pub fn integrate_checked<M, O, R, const N: usize>(
    model: &M,
    initial: &FieldState,
    config: &IntegratorConfig,
    rng: &mut R,
    observer: &mut O,
    trajectory: u64,
) -> Result<TrajectoryOutcome>
where
    M: Model<N>,
    O: Observer<N>,
    R: Rng + ?Sized,
{
    let out = integrate_trajectory(model, initial, config, rng, observer);
    match out.status {
        TrajectoryStatus::Diverged { step } => Err(OpoError::NonFinite { trajectory, step }),
        TrajectoryStatus::Completed => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::steady_state;
    use std::f64::consts::SQRT_2;

    fn params(kappa: f64, g: f64) -> DimensionlessParams {
        DimensionlessParams::new(SQRT_2, kappa, g).unwrap()
    }

    fn max_norm<const N: usize>(a: &[C; N]) -> f64 {
        a.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn gaussian_pair_values() {
        assert_eq!(gaussian_pair(1.0, 0.37).unwrap(), 0.0);
        assert!((gaussian_pair((-1f64).exp(), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(gaussian_pair(0.0, 0.5).is_err());
        assert!(gaussian_pair(0.5, 1.0).is_err());
    }

    #[test]
    fn principal_sqrt_branch() {
        for z in [C::new(4.0, 0.0), C::new(-4.0, 0.0), C::new(-4.0, -0.0), C::new(0.3, -2.0), C::new(-1.0, 1e-300), C::new(-3.0, -1.0)] {
            let r = principal_sqrt(z);
            assert!((r * r - z).norm() < 1e-14 * z.norm().max(1.0));
            assert!(r.re >= 0.0);
        }
        assert_eq!(principal_sqrt(C::new(-4.0, 0.0)), C::new(0.0, 2.0));
        assert_eq!(principal_sqrt(C::new(-4.0, -0.0)), C::new(0.0, 2.0));
        assert_eq!(principal_sqrt(C::new(-4.0, -1e-9)).im.signum(), -1.0);
        let z = C::new(0.7, -0.2);
        assert!((principal_sqrt(z) - z.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn drift_vanishes_at_fixed_point() {
        let f = FieldState::from_steady_state(&steady_state(SQRT_2, 0.0).unwrap());
        let m = FullModel { p: params(1.0, 1e-3) };
        assert!(max_norm(&m.drift(&f.to_array())) < 1e-14);
        let r = ReducedModel { p: params(3.0, 1e-3) };
        assert!(max_norm(&r.increment(&r.state_from_field(&f), 1.0, &NoiseIncrement::ZERO)) < 1e-14);
        let d = m.diffusion(&f.to_array());
        assert!((d[0] - C::new(1e-3, 0.0)).norm() < 1e-18);
    }

    #[test]
    fn pump_decouples_without_signal() {
        let m = FullModel { p: params(2.5, 1e-3) };
        let s = [C::new(0.3, 0.1), C::new(0.2, 0.0), ZERO, ZERO, ZERO, ZERO];
        let dr = m.drift(&s);
        assert!((dr[0] - 2.5 * (SQRT_2 - s[0])).norm() < 1e-15);
        assert_eq!(dr[2], ZERO);
    }

    #[test]
    fn adiabatic_drift_reduces_to_classical_when_noise_free() {
        let p = DimensionlessParams::new(SQRT_2, 1.0, 0.0).unwrap();
        let m = AdiabaticModel { p };
        let s = steady_state(SQRT_2, 0.3).unwrap();
        let f = FieldState::from_steady_state(&s);
        assert!(max_norm(&m.drift(&m.state_from_field(&f))) < 1e-14);
        // the g^2/4 correction displaces the fixed point by O(g^2)
        let m = AdiabaticModel { p: params(1.0, 1e-3) };
        let dr = m.drift(&m.state_from_field(&f));
        let rho = (SQRT_2 - 1.0).sqrt();
        assert!((dr[0] - 0.25e-6 * rho * C::from_polar(1.0, -0.3)).norm() < 1e-15);
    }

    #[test]
    fn noise_free_relaxation_reaches_manifold() {
        let m = FullModel { p: DimensionlessParams::new(SQRT_2, 2.0, 0.0).unwrap() };
        let mut f = FieldState::from_steady_state(&steady_state(SQRT_2, 0.2).unwrap());
        f.beta0 += 0.1;
        f.beta0_plus += 0.1;
        f.beta_p1 *= 1.2;
        f.beta_p1_plus *= 1.2;
        let cfg = IntegratorConfig::from_tau_end(1e-2, 40.0, 2, SystemKind::Full).unwrap();
        let mut rng = trajectory_rng(1, 0);
        let mut last = f.to_array();
        let out = integrate_trajectory(&m, &f, &cfg, &mut rng, &mut |_: u64, _: f64, _: &Signal, s: &[C; 6]| last = *s);
        assert_eq!(out.status, TrajectoryStatus::Completed);
        let r = crate::classical::residual(last[0], last[2], last[4], SQRT_2);
        assert!(r.iter().all(|c| c.norm() < 1e-10), "{r:?}");
    }

    #[test]
    fn zero_noise_fixed_point_is_preserved() {
        let m = ReducedModel { p: params(1.0, 1e-3) };
        let f = FieldState::from_steady_state(&steady_state(SQRT_2, 0.0).unwrap());
        let s = m.state_from_field(&f);
        let out = step_semi_implicit(&m, &s, 3e-3, 2, &NoiseIncrement::ZERO);
        assert!(max_norm(&[out[0] - s[0], out[1] - s[1], out[2] - s[2], out[3] - s[3]]) < 1e-14);
    }

    #[test]
    fn g_zero_keeps_trajectory_constant() {
        let m = ReducedModel { p: DimensionlessParams::new(SQRT_2, 1.0, 0.0).unwrap() };
        let f = FieldState::from_steady_state(&steady_state(SQRT_2, 0.0).unwrap());
        let cfg = IntegratorConfig::from_tau_end(3e-3, 3.0, 2, SystemKind::Reduced).unwrap();
        let mut worst: f64 = 0.0;
        let s0 = m.state_from_field(&f);
        integrate_trajectory(&m, &f, &cfg, &mut trajectory_rng(3, 1), &mut |_: u64, _: f64, _: &Signal, s: &[C; 4]| {
            for i in 0..4 {
                worst = worst.max((s[i] - s0[i]).norm());
            }
        });
        assert!(worst < 1e-13);
    }

    #[test]
    fn same_seed_same_path() {
        let m = ReducedModel { p: params(1.0, 1e-2) };
        let f = FieldState::from_steady_state(&steady_state(SQRT_2, 0.0).unwrap());
        let cfg = IntegratorConfig::from_tau_end(3e-3, 3.0, 2, SystemKind::Reduced).unwrap();
        let run = |seed| {
            let mut v = Vec::new();
            integrate_trajectory(&m, &f, &cfg, &mut trajectory_rng(seed, 7), &mut |_: u64, _: f64, sg: &Signal, _: &[C; 4]| {
                v.push(sg.bp.re.to_bits())
            });
            v
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn divergence_is_reported() {
        struct Blowup;
        impl Increment<1> for Blowup {
            fn increment(&self, s: &[C; 1], dt: f64, _: &NoiseIncrement) -> [C; 1] {
                [dt * s[0] * s[0]]
            }
        }
        impl Model<1> for Blowup {
            fn signal(&self, s: &[C; 1]) -> Signal {
                Signal { bp: s[0], bp_plus: s[0], bm: s[0], bm_plus: s[0] }
            }
            fn pump(&self, _: &[C; 1]) -> (C, C) {
                (C::new(1.0, 0.0), C::new(1.0, 0.0))
            }
            fn state_from_field(&self, f: &FieldState) -> [C; 1] {
                [f.beta0]
            }
            fn to_field(&self, _: &[C; 1]) -> FieldState {
                unimplemented!()
            }
        }
        let mut f = FieldState::from_steady_state(&steady_state(0.5, 0.0).unwrap());
        f.beta0 = C::new(1.0, 0.0);
        let cfg = IntegratorConfig::from_tau_end(0.01, 2.0, 2, SystemKind::Full).unwrap();
        let err = integrate_checked(&Blowup, &f, &cfg, &mut trajectory_rng(0, 0), &mut |_: u64, _: f64, _: &Signal, _: &[C; 1]| {}, 42);
        assert!(matches!(err, Err(OpoError::NonFinite { trajectory: 42, .. })));
    }

    #[test]
    fn tau_end_must_be_multiple_of_dt() {
        assert_eq!(IntegratorConfig::from_tau_end(3e-3, 30.0, 2, SystemKind::Reduced).unwrap().steps, 10_000);
        assert!(IntegratorConfig::from_tau_end(0.7, 1.0, 2, SystemKind::Reduced).is_err());
        assert!(IntegratorConfig::from_tau_end(0.1, 1.0, 0, SystemKind::Reduced).is_err());
    }
}
