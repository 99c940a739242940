//! Physical cavity parameters and the dimensionless model parameters.
//!
//! All physical quantities are SI. Downstream dynamics depend only on
//! `(sigma, kappa, g)`; time is measured in units of the signal decay
//! time `1/gamma_s`.

use crate::error::{OpoError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in vacuum (m/s), CODATA 2018 (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J s), CODATA 2018 (exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Pump,
    Signal,
}

/// Fabry-Perot cavity with two identical spherical mirrors and a thin crystal
/// at the waist plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSetup {
    /// Pump wavelength (m).
    pub lambda_p: f64,
    /// Mirror curvature radius (m).
    pub mirror_radius: f64,
    /// Effective cavity length (m).
    pub cavity_length: f64,
    /// Crystal length (m).
    pub crystal_length: f64,
    /// Refractive index.
    pub n: f64,
    /// Second-order susceptibility (m/V).
    pub chi2: f64,
    /// Input mirror transmission at the pump frequency.
    pub t_p: f64,
    /// Input mirror transmission at the signal frequency.
    pub t_s: f64,
    /// Injected laser power (W).
    pub p_laser: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Pump cavity decay rate (1/s).
    pub gamma_p: f64,
    /// Signal cavity decay rate (1/s).
    pub gamma_s: f64,
    /// Nonlinear coupling (1/s).
    pub chi: f64,
    /// Pump injection amplitude (1/s).
    pub e_p: f64,
}

impl PhysicalSetup {
    /// Typical table-top values, pumped at twice the threshold power (sigma = sqrt 2).
    pub fn typical() -> Self {
        let mut s = PhysicalSetup {
            lambda_p: 400e-9,
            mirror_radius: 1.0,
            cavity_length: 0.1,
            crystal_length: 1e-3,
            n: 2.5,
            chi2: 2e-12,
            t_p: 0.1,
            t_s: 0.01,
            p_laser: 0.0,
        };
        s.p_laser = pump_power_for_sigma(&s, std::f64::consts::SQRT_2)
            .expect("typical setup is valid");
        s
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("lambda_p", self.lambda_p),
            ("mirror_radius", self.mirror_radius),
            ("cavity_length", self.cavity_length),
            ("crystal_length", self.crystal_length),
            ("n", self.n),
            ("chi2", self.chi2),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OpoError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("t_p", self.t_p), ("t_s", self.t_s)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(OpoError::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.p_laser >= 0.0 && self.p_laser.is_finite()) {
            return Err(OpoError::InvalidParameter(format!(
                "p_laser must be non-negative, got {}",
                self.p_laser
            )));
        }
        let ratio = 2.0 * self.mirror_radius / self.cavity_length;
        if ratio <= 1.0 {
            return Err(OpoError::Geometry { ratio });
        }
        Ok(())
    }

    pub fn wavelength(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Pump => self.lambda_p,
            Branch::Signal => 2.0 * self.lambda_p,
        }
    }
}

/// Beam radius at the waist plane, `w^2 = (lambda L / 2 pi) sqrt(2R/L - 1)`.
pub fn waist_radius(setup: &PhysicalSetup, branch: Branch) -> Result<f64> {
    let ratio = 2.0 * setup.mirror_radius / setup.cavity_length;
    if !(ratio > 1.0) {
        return Err(OpoError::Geometry { ratio });
    }
    let lambda = setup.wavelength(branch);
    let w2 = lambda * setup.cavity_length / (2.0 * PI) * (ratio - 1.0).sqrt();
    Ok(w2.sqrt())
}

pub fn derived_rates(setup: &PhysicalSetup) -> Result<DerivedRates> {
    setup.validate()?;
    let c = SPEED_OF_LIGHT;
    let l = setup.cavity_length;
    let gamma_p = c * setup.t_p / (2.0 * l);
    let gamma_s = c * setup.t_s / (2.0 * l);
    let w_p = waist_radius(setup, Branch::Pump)?;
    let chi = 3.0 * PI * setup.chi2 * setup.crystal_length / w_p
        * (HBAR / EPSILON_0).sqrt()
        * (c / (setup.n * l * setup.lambda_p)).powf(1.5);
    let e_p = (setup.n * setup.lambda_p * gamma_p / (2.0 * PI * HBAR * c) * setup.p_laser).sqrt();
    Ok(DerivedRates { gamma_p, gamma_s, chi, e_p })
}

/// Laser power that puts the pump at `sigma` times the threshold amplitude.
pub fn pump_power_for_sigma(setup: &PhysicalSetup, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(OpoError::InvalidParameter(format!("sigma must be non-negative, got {sigma}")));
    }
    let probe = PhysicalSetup { p_laser: 0.0, ..*setup };
    let r = derived_rates(&probe)?;
    let e_p = sigma * r.gamma_p * r.gamma_s / r.chi;
    Ok(e_p * e_p * 2.0 * PI * HBAR * SPEED_OF_LIGHT / (setup.n * setup.lambda_p * r.gamma_p))
}

/// The three model parameters of the rescaled Langevin equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessParams {
    /// Pump level relative to threshold.
    pub sigma: f64,
    /// Decay ratio `gamma_p / gamma_s`.
    pub kappa: f64,
    /// Nonlinear coupling `chi / sqrt(gamma_p gamma_s)`.
    pub g: f64,
}

impl DimensionlessParams {
    pub fn new(sigma: f64, kappa: f64, g: f64) -> Result<Self> {
        let p = DimensionlessParams { sigma, kappa, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(OpoError::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(OpoError::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(OpoError::InvalidParameter(format!("g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    pub fn above_threshold(&self) -> bool {
        self.sigma > 1.0
    }

    /// `d = g^2 / 4`.
    pub fn d(&self) -> f64 {
        self.g * self.g / 4.0
    }

    /// `rho = sqrt(sigma - 1)`, defined for sigma >= 1.
    pub fn rho(&self) -> Option<f64> {
        (self.sigma >= 1.0).then(|| (self.sigma - 1.0).sqrt())
    }

    /// Orientation diffusion constant `D = d / (sigma - 1)`, defined above threshold.
    pub fn diffusion(&self) -> Option<f64> {
        self.above_threshold().then(|| self.d() / (self.sigma - 1.0))
    }

    pub fn require_above_threshold(&self) -> Result<(f64, f64)> {
        match (self.rho(), self.diffusion()) {
            (Some(r), Some(dd)) => Ok((r, dd)),
            _ => Err(OpoError::BelowThreshold(self.sigma)),
        }
    }
}

pub fn dimensionless(setup: &PhysicalSetup, rates: Option<&DerivedRates>) -> Result<DimensionlessParams> {
    let r = match rates {
        Some(r) => *r,
        None => derived_rates(setup)?,
    };
    Ok(DimensionlessParams {
        sigma: r.e_p * r.chi / (r.gamma_p * r.gamma_s),
        kappa: r.gamma_p / r.gamma_s,
        g: r.chi / (r.gamma_p * r.gamma_s).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn pump_waist_matches_table() {
        let w = waist_radius(&PhysicalSetup::typical(), Branch::Pump).unwrap();
        assert!((w * 1e6 - 167.0).abs() < 0.5, "w_p = {w}");
    }

    #[test]
    fn signal_waist_is_sqrt2_larger() {
        let s = PhysicalSetup::typical();
        let wp = waist_radius(&s, Branch::Pump).unwrap();
        let ws = waist_radius(&s, Branch::Signal).unwrap();
        assert!(rel(ws / wp, 2f64.sqrt()) < 1e-12);
        assert!((ws * 1e6 - 235.6).abs() < 0.5);
    }

    #[test]
    fn waist_vanishes_at_marginal_geometry() {
        let mut s = PhysicalSetup::typical();
        s.mirror_radius = 0.5 * (s.cavity_length + 1e-12);
        assert!(waist_radius(&s, Branch::Pump).unwrap() < 1e-6);
        s.mirror_radius = 0.5 * s.cavity_length;
        assert!(matches!(waist_radius(&s, Branch::Pump), Err(OpoError::Geometry { .. })));
    }

    #[test]
    fn typical_rates() {
        let r = derived_rates(&PhysicalSetup::typical()).unwrap();
        assert!(rel(r.gamma_p, 0.15e9) < 0.01);
        assert!(rel(r.gamma_s, 0.015e9) < 0.01);
        // tabulated value 64 s^-1 (rounded)
        assert!(rel(r.chi, 64.0) < 0.05);
        assert!((r.chi - 64.1014).abs() < 1e-3);
    }

    #[test]
    fn rates_linear_in_transmission() {
        let s = PhysicalSetup::typical();
        let s2 = PhysicalSetup { t_p: 2.0 * s.t_p, ..s };
        let a = derived_rates(&s).unwrap();
        let b = derived_rates(&s2).unwrap();
        assert!(rel(b.gamma_p, 2.0 * a.gamma_p) < 1e-14);
    }

    #[test]
    fn typical_dimensionless() {
        let p = dimensionless(&PhysicalSetup::typical(), None).unwrap();
        assert!(rel(p.sigma, 2f64.sqrt()) < 1e-12);
        assert!(rel(p.kappa, 10.0) < 1e-12);
        assert!(rel(p.g, 1.3523e-6) < 1e-3);
        assert!(rel(p.d(), 4.572e-13) < 1e-3);
    }

    #[test]
    fn threshold_pump_gives_unit_sigma() {
        let mut s = PhysicalSetup::typical();
        s.p_laser = pump_power_for_sigma(&s, 1.0).unwrap();
        let p = dimensionless(&s, None).unwrap();
        assert!(rel(p.sigma, 1.0) < 1e-12);
        assert!(!p.above_threshold());
        assert_eq!(p.diffusion(), None);
    }

    #[test]
    fn d_from_g() {
        let p = DimensionlessParams::new(2f64.sqrt(), 1.0, 1e-3).unwrap();
        assert!(rel(p.d(), 2.5e-7) < 1e-15);
        let (rho, dd) = p.require_above_threshold().unwrap();
        assert!(rel(rho * rho, p.sigma - 1.0) < 1e-14);
        assert!(rel(dd * (p.sigma - 1.0), p.d()) < 1e-14);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(DimensionlessParams::new(1.5, 0.0, 1e-3).is_err());
        assert!(DimensionlessParams::new(1.5, 1.0, -1.0).is_err());
        let mut s = PhysicalSetup::typical();
        s.t_s = 1.0;
        assert!(derived_rates(&s).is_err());
    }

    proptest! {
        #[test]
        fn d_is_quarter_g_squared(g in 1e-9f64..1.0, sigma in 0.1f64..10.0, kappa in 0.01f64..100.0) {
            let p = DimensionlessParams::new(sigma, kappa, g).unwrap();
            prop_assert_eq!(p.d(), g * g / 4.0);
        }

        #[test]
        fn waist_scales_as_sqrt_lambda(lp in 100e-9f64..2e-6, r in 0.2f64..5.0, l in 0.01f64..0.3) {
            prop_assume!(2.0 * r / l > 1.0 + 1e-6);
            let s = PhysicalSetup { lambda_p: lp, mirror_radius: r, cavity_length: l, ..PhysicalSetup::typical() };
            let wp = waist_radius(&s, Branch::Pump).unwrap();
            let ws = waist_radius(&s, Branch::Signal).unwrap();
            prop_assert!(rel(ws / wp, 2f64.sqrt()) < 1e-12);
        }

        #[test]
        fn requested_sigma_recovered(sigma in 0.05f64..20.0, t_p in 0.01f64..0.5) {
            let mut s = PhysicalSetup { t_p, ..PhysicalSetup::typical() };
            s.p_laser = pump_power_for_sigma(&s, sigma).unwrap();
            let p = dimensionless(&s, None).unwrap();
            prop_assert!(rel(p.sigma, sigma) < 1e-12);
        }
    }
}
