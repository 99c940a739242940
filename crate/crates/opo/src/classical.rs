//! Classical steady states and transverse mode profiles at the waist plane.
//!
//! Stability below threshold: with the noise switched off and
//! `beta0 = sigma`, `beta_pm = 0`, the products `beta_+ beta_-` are second
//! order, so the pump fluctuations decouple with rate `-kappa` while each
//! signal pair `(d beta_+, d beta_-^+)` obeys
//! `d/dt (x, y) = [[-1, sigma], [sigma, -1]] (x, y)` with eigenvalues
//! `-1 +- sigma`. See [`below_threshold_jacobian`].

use crate::error::{OpoError, Result};
use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdBranch {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub beta0: Complex64,
    pub beta_plus: Complex64,
    pub beta_minus: Complex64,
    /// Pattern orientation (rad); zero below threshold.
    pub theta: f64,
    pub branch: ThresholdBranch,
}

/// Stable classical fixed point for pump level `sigma`.
pub fn steady_state(sigma: f64, theta: f64) -> Result<SteadyState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(OpoError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if sigma <= 1.0 {
        return Ok(SteadyState {
            beta0: Complex64::new(sigma, 0.0),
            beta_plus: Complex64::new(0.0, 0.0),
            beta_minus: Complex64::new(0.0, 0.0),
            theta: 0.0,
            branch: ThresholdBranch::Below,
        });
    }
    let rho = (sigma - 1.0).sqrt();
    Ok(SteadyState {
        beta0: Complex64::new(1.0, 0.0),
        beta_plus: Complex64::from_polar(rho, -theta),
        beta_minus: Complex64::from_polar(rho, theta),
        theta,
        branch: ThresholdBranch::Above,
    })
}

/// Fixed-point residual of the noiseless equations; zero iff `(beta0, beta_+, beta_-)` is stationary.
pub fn residual(beta0: Complex64, beta_plus: Complex64, beta_minus: Complex64, sigma: f64) -> [Complex64; 3] {
    [
        beta0 - sigma + beta_plus * beta_minus,
        beta_plus - beta0 * beta_minus.conj(),
        beta_minus - beta0 * beta_plus.conj(),
    ]
}

/// Linearization of the noiseless six-amplitude equations about the
/// below-threshold state, ordered `(b0, b0+, b+, b+^+, b-, b-^+)`.
pub fn below_threshold_jacobian(sigma: f64, kappa: f64) -> SMatrix<f64, 6, 6> {
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    m[(0, 0)] = -kappa;
    m[(1, 1)] = -kappa;
    for i in 2..6 {
        m[(i, i)] = -1.0;
    }
    // b+ couples to b-^+, b+^+ to b-
    m[(2, 5)] = sigma;
    m[(5, 2)] = sigma;
    m[(3, 4)] = sigma;
    m[(4, 3)] = sigma;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeKind {
    Gauss,
    LgPlus,
    LgMinus,
    Hg10 { psi: f64 },
    Hg01 { psi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseMode {
    pub kind: ModeKind,
    /// Beam radius at the waist (m).
    pub waist: f64,
}

impl TransverseMode {
    pub fn new(kind: ModeKind, waist: f64) -> Self {
        TransverseMode { kind, waist }
    }
}

fn lg_modulus(r: f64, w: f64) -> f64 {
    2.0 / PI.sqrt() * r / (w * w) * (-(r * r) / (w * w)).exp()
}

/// Complex field amplitude (1/m) of an L2-normalized mode at polar point `(r, phi)`.
pub fn mode_field(mode: &TransverseMode, r: f64, phi: f64) -> Complex64 {
    let w = mode.waist;
    match mode.kind {
        ModeKind::Gauss => {
            Complex64::new((2.0 / PI).sqrt() / w * (-(r * r) / (w * w)).exp(), 0.0)
        }
        ModeKind::LgPlus => Complex64::from_polar(lg_modulus(r, w), phi),
        ModeKind::LgMinus => Complex64::from_polar(lg_modulus(r, w), -phi),
        ModeKind::Hg10 { psi } => {
            Complex64::new(2f64.sqrt() * lg_modulus(r, w) * (phi - psi).cos(), 0.0)
        }
        ModeKind::Hg01 { psi } => {
            Complex64::new(2f64.sqrt() * lg_modulus(r, w) * (phi - psi).sin(), 0.0)
        }
    }
}

pub fn mode_field_xy(mode: &TransverseMode, x: f64, y: f64) -> Complex64 {
    mode_field(mode, x.hypot(y), y.atan2(x))
}

/// Square Cartesian sampling grid centred on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub half_width: f64,
    pub n: usize,
}

impl CartesianGrid {
    /// 128 x 128 points spanning +-3 signal waists.
    pub fn default_for(signal_waist: f64) -> Self {
        CartesianGrid { half_width: 3.0 * signal_waist, n: 128 }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n as f64 - 1.0)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Row-major `(x, y)` points, `x` varying fastest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                out.push((self.coordinate(i), self.coordinate(j)));
            }
        }
        out
    }

    /// Tensor-product trapezoid rule over the grid.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let h = self.spacing();
        let wt = |i: usize| if i == 0 || i + 1 == self.n { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for j in 0..self.n {
            let y = self.coordinate(j);
            for i in 0..self.n {
                acc += wt(i) * wt(j) * f(self.coordinate(i), y);
            }
        }
        acc * h * h
    }
}

/// Classical bright TEM10 pattern `sqrt(2) rho H10^theta` sampled at Cartesian points.
pub fn bright_pattern(sigma: f64, theta: f64, signal_waist: f64, points: &[(f64, f64)]) -> Result<Vec<Complex64>> {
    if !(sigma > 1.0) {
        return Err(OpoError::BelowThreshold(sigma));
    }
    let rho = (sigma - 1.0).sqrt();
    let mode = TransverseMode::new(ModeKind::Hg10 { psi: theta }, signal_waist);
    Ok(points
        .iter()
        .map(|&(x, y)| 2f64.sqrt() * rho * mode_field_xy(&mode, x, y))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: f64 = 2.356e-4;

    fn norm_sq(res: &[Complex64; 3]) -> f64 {
        res.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn below_threshold_branch() {
        let s = steady_state(0.5, 1.0).unwrap();
        assert_eq!(s.branch, ThresholdBranch::Below);
        assert_eq!(s.beta0, Complex64::new(0.5, 0.0));
        assert_eq!(s.beta_plus, Complex64::new(0.0, 0.0));
        assert!(steady_state(0.0, 0.0).is_err());
    }

    #[test]
    fn above_threshold_amplitudes() {
        let s = steady_state(2f64.sqrt(), 0.0).unwrap();
        assert!((s.beta_plus.re - 0.643_594_252_905_582_6).abs() < 1e-12);
        assert!((s.beta0.re - 1.0).abs() < 1e-15);
        let s = steady_state(2.0, PI / 4.0).unwrap();
        let e = Complex64::from_polar(1.0, -PI / 4.0);
        assert!((s.beta_plus - e).norm() < 1e-15);
        assert!((s.beta_minus - e.conj()).norm() < 1e-15);
    }

    #[test]
    fn residual_vanishes_on_fixed_points() {
        let s = steady_state(2f64.sqrt(), 0.0).unwrap();
        assert!(norm_sq(&residual(s.beta0, s.beta_plus, s.beta_minus, 2f64.sqrt())) < 1e-14);
        for sigma in [0.3, 1.7, 4.0] {
            let z = Complex64::new(0.0, 0.0);
            assert_eq!(norm_sq(&residual(Complex64::new(sigma, 0.0), z, z, sigma)), 0.0);
        }
    }

    #[test]
    fn below_threshold_jacobian_is_stable() {
        for sigma in [0.1, 0.5, 0.99] {
            let ev = below_threshold_jacobian(sigma, 3.0).symmetric_eigenvalues();
            assert!(ev.iter().all(|&l| l < 0.0), "{ev:?}");
        }
        let ev = below_threshold_jacobian(1.2, 3.0).symmetric_eigenvalues();
        assert!(ev.iter().any(|&l| l > 0.0));
        let mut sorted: Vec<f64> = ev.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[5] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mode_zeros() {
        let lp = TransverseMode::new(ModeKind::LgPlus, W);
        assert_eq!(mode_field(&lp, 0.0, 0.3).norm(), 0.0);
        let h = TransverseMode::new(ModeKind::Hg01 { psi: 0.7 }, W);
        for r in [1e-5, 1e-4, 3e-4] {
            assert!(mode_field(&h, r, 0.7).norm() < 1e-12);
        }
    }

    #[test]
    fn modes_are_normalized_and_orthogonal() {
        let grid = CartesianGrid::default_for(W);
        let wp = W / 2f64.sqrt();
        let modes = [
            TransverseMode::new(ModeKind::Gauss, wp),
            TransverseMode::new(ModeKind::LgPlus, W),
            TransverseMode::new(ModeKind::LgMinus, W),
            TransverseMode::new(ModeKind::Hg10 { psi: 0.0 }, W),
            TransverseMode::new(ModeKind::Hg01 { psi: 0.4 }, W),
        ];
        for m in &modes {
            let n = grid.integrate(|x, y| mode_field_xy(m, x, y).norm_sqr());
            assert!((n - 1.0).abs() < 1e-6, "{:?} norm {n}", m.kind);
        }
        let a = TransverseMode::new(ModeKind::Hg10 { psi: 0.4 }, W);
        let b = TransverseMode::new(ModeKind::Hg01 { psi: 0.4 }, W);
        let overlap = grid.integrate(|x, y| (mode_field_xy(&a, x, y).conj() * mode_field_xy(&b, x, y)).re);
        assert!(overlap.abs() < 1e-6);
    }

    #[test]
    fn pattern_orientation() {
        let pts = [(1e-4, 0.0), (0.0, 1e-4), (-1e-4, 0.0)];
        let f = bright_pattern(2.0, 0.0, W, &pts).unwrap();
        assert!(f[0].re > 0.0 && f[2].re < 0.0);
        assert!(f[1].norm() < 1e-9 * f[0].norm());
        let near = bright_pattern(1.0 + 1e-14, 0.0, W, &pts).unwrap();
        assert!(near[0].norm() < 1e-3);
        assert!(bright_pattern(1.0, 0.0, W, &pts).is_err());
    }

    proptest! {
        #[test]
        fn lg_hg_change_of_basis_is_unitary(r in 0.0f64..6e-4, phi in -PI..PI, psi in -PI..PI) {
            let lp = mode_field(&TransverseMode::new(ModeKind::LgPlus, W), r, phi);
            let lm = mode_field(&TransverseMode::new(ModeKind::LgMinus, W), r, phi);
            let h10 = mode_field(&TransverseMode::new(ModeKind::Hg10 { psi }, W), r, phi);
            let h01 = mode_field(&TransverseMode::new(ModeKind::Hg01 { psi }, W), r, phi);
            let i = Complex64::i();
            let e = Complex64::from_polar(1.0, psi);
            // invert H10 = (e^-ipsi L+ + e^ipsi L-)/sqrt2, H01 = (e^-ipsi L+ - e^ipsi L-)/(sqrt2 i)
            let lp_rec = e * (h10 + i * h01) / 2f64.sqrt();
            let lm_rec = e.conj() * (h10 - i * h01) / 2f64.sqrt();
            let scale = lp.norm().max(1.0);
            prop_assert!((lp_rec - lp).norm() < 1e-12 * scale);
            prop_assert!((lm_rec - lm).norm() < 1e-12 * scale);
        }

        #[test]
        fn residual_is_phase_invariant(sigma in 1.01f64..5.0, psi in -PI..PI) {
            let s = steady_state(sigma, 0.0).unwrap();
            let bp = s.beta_plus * Complex64::from_polar(1.0, -psi);
            let bm = s.beta_minus * Complex64::from_polar(1.0, psi);
            prop_assert!(norm_sq(&residual(s.beta0, bp, bm, sigma)) < 1e-13);
        }

        #[test]
        fn pattern_rotation(sigma in 1.1f64..4.0, theta in -PI..PI, x in -5e-4f64..5e-4, y in -5e-4f64..5e-4) {
            let r = x.hypot(y);
            let phi = y.atan2(x);
            let a = bright_pattern(sigma, theta, W, &[(x, y)]).unwrap()[0];
            let b = bright_pattern(sigma, 0.0, W, &[(r * (phi - theta).cos(), r * (phi - theta).sin())]).unwrap()[0];
            prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        }
    }
}
