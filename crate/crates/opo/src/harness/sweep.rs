use crate::analytics::{fixed_lo_spectrum_with, optimal_detection_time, optimal_noise_frequency, to_db, FixedLoForm};
use crate::error::{OpoError, Result};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Phi,
    D,
    T,
    Omega,
    Sigma,
}

impl FromStr for SweepAxis {
    type Err = OpoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(SweepAxis::Phi),
            "d" => Ok(SweepAxis::D),
            "T" | "t" => Ok(SweepAxis::T),
            "omega" => Ok(SweepAxis::Omega),
            "sigma" => Ok(SweepAxis::Sigma),
            _ => Err(OpoError::Config(format!("unknown sweep axis '{s}' (phi|d|T|omega|sigma)"))),
        }
    }
}

/// Base point of a sweep. `phi_deg` is in degrees; `t = None` means `T_opt(sigma, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub sigma: f64,
    pub d: f64,
    pub phi_deg: f64,
    pub t: Option<f64>,
    pub omega: f64,
    pub form: FixedLoForm,
}

impl Default for SweepTemplate {
    fn default() -> Self {
        SweepTemplate { sigma: std::f64::consts::SQRT_2, d: 1e-10, phi_deg: 90.0, t: None, omega: 0.0, form: FixedLoForm::Consistent }
    }
}

/// Column-labelled numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn evaluate(p: &SweepTemplate) -> Result<(f64, f64)> {
    let t = match p.t {
        Some(t) => t,
        None => optimal_detection_time(p.sigma, p.d)?,
    };
    Ok((t, fixed_lo_spectrum_with(p.omega, p.phi_deg.to_radians(), t, p.d, p.sigma, p.form)))
}

/// Fixed local oscillator spectrum along one axis: columns `(x, T, V, V_dB)`.
pub fn sweep(template: &SweepTemplate, axis: SweepAxis, grid: &[f64]) -> Result<Table> {
    let name = match axis {
        SweepAxis::Phi => "phi_deg",
        SweepAxis::D => "d",
        SweepAxis::T => "T",
        SweepAxis::Omega => "omega",
        SweepAxis::Sigma => "sigma",
    };
    let rows = grid
        .iter()
        .map(|&x| {
            let mut p = *template;
            match axis {
                SweepAxis::Phi => p.phi_deg = x,
                SweepAxis::D => p.d = x,
                SweepAxis::T => p.t = Some(x),
                SweepAxis::Omega => p.omega = x,
                SweepAxis::Sigma => p.sigma = x,
            }
            let (t, v) = evaluate(&p)?;
            Ok(vec![x, t, v, to_db(v)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { columns: vec![name.into(), "T".into(), "v_out".into(), "v_db".into()], rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Noise at `phi = 90 deg`, `omega = 0` against `T` for three values of `d`.
    Fig2,
    /// Optimum noise level `1/T_opt` against `d`.
    Fig2Inset,
    /// Spectra against `omega` for phases near 90 deg at `d = 1e-10`, `T = T_opt`.
    Fig3a,
    /// Noise at `(omega_opt, T_opt)` against phase for `d = 1e-13, 1e-6`, with `omega_opt`.
    Fig3b,
}

impl FromStr for Preset {
    type Err = OpoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig2-inset" => Ok(Preset::Fig2Inset),
            "fig3a" => Ok(Preset::Fig3a),
            "fig3b" => Ok(Preset::Fig3b),
            _ => Err(OpoError::Config(format!("unknown preset '{s}' (fig2|fig2-inset|fig3a|fig3b)"))),
        }
    }
}

/// Figure data in dB.
pub fn preset(which: Preset, form: FixedLoForm) -> Result<Table> {
    let sigma = std::f64::consts::SQRT_2;
    let half_pi = std::f64::consts::FRAC_PI_2;
    match which {
        Preset::Fig2 => {
            let ds = [1e-11, 1e-12, 1e-13];
            let ts = log_grid(1e2, 1e9, 281);
            let rows = ts
                .iter()
                .map(|&t| {
                    let mut r = vec![t];
                    r.extend(ds.iter().map(|&d| to_db(fixed_lo_spectrum_with(0.0, half_pi, t, d, sigma, form))));
                    r
                })
                .collect();
            Ok(Table { columns: vec!["T".into(), "db_d1e-11".into(), "db_d1e-12".into(), "db_d1e-13".into()], rows })
        }
        Preset::Fig2Inset => {
            let rows = log_grid(1e-14, 1e-6, 81)
                .iter()
                .map(|&d| {
                    let t = optimal_detection_time(sigma, d)?;
                    let v = fixed_lo_spectrum_with(0.0, half_pi, t, d, sigma, form);
                    Ok(vec![d, t, to_db(v), to_db(1.0 / t)])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table { columns: vec!["d".into(), "T_opt".into(), "v_opt_db".into(), "inv_t_opt_db".into()], rows })
        }
        Preset::Fig3a => {
            let d = 1e-10;
            let t = optimal_detection_time(sigma, d)?;
            let phis = [88.0f64, 89.0, 89.5, 90.0];
            let rows = lin_grid(0.0, 4.0, 401)
                .iter()
                .map(|&w| {
                    let mut r = vec![w];
                    r.extend(phis.iter().map(|p| to_db(fixed_lo_spectrum_with(w, p.to_radians(), t, d, sigma, form))));
                    r
                })
                .collect();
            Ok(Table {
                columns: vec!["omega".into(), "db_phi88".into(), "db_phi89".into(), "db_phi89.5".into(), "db_phi90".into()],
                rows,
            })
        }
        Preset::Fig3b => {
            let ds = [1e-13, 1e-6];
            let rows = lin_grid(60.0, 90.0, 121)
                .iter()
                .map(|&p| {
                    let phi = p.to_radians();
                    let w = optimal_noise_frequency(phi, sigma, ds[0])?;
                    let mut r = vec![p, w];
                    for &d in &ds {
                        let t = optimal_detection_time(sigma, d)?;
                        let wd = optimal_noise_frequency(phi, sigma, d)?;
                        r.push(to_db(fixed_lo_spectrum_with(wd, phi, t, d, sigma, form)));
                    }
                    Ok(r)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table { columns: vec!["phi_deg".into(), "omega_opt".into(), "db_d1e-13".into(), "db_d1e-6".into()], rows })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_minimum_at_optimal_time() {
        let tab = preset(Preset::Fig2, FixedLoForm::Consistent).unwrap();
        let ts = tab.column("T").unwrap();
        for (col, d) in [("db_d1e-11", 1e-11), ("db_d1e-12", 1e-12), ("db_d1e-13", 1e-13)] {
            let v = tab.column(col).unwrap();
            let i = v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let t_opt = optimal_detection_time(std::f64::consts::SQRT_2, d).unwrap();
            // grid spacing is 10^(7/280)
            assert!((ts[i] / t_opt).ln().abs() < 0.06, "{col}: {} vs {t_opt}", ts[i]);
        }
    }

    #[test]
    fn fig2_inset_is_one_over_t_opt() {
        let tab = preset(Preset::Fig2Inset, FixedLoForm::Consistent).unwrap();
        for r in &tab.rows {
            assert!((r[2] - r[3]).abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn fig3a_ordering_near_zero_frequency() {
        let tab = preset(Preset::Fig3a, FixedLoForm::Consistent).unwrap();
        let r = &tab.rows[1];
        assert!(r[1] > r[2] && r[2] > r[3] && r[3] > r[4], "{r:?}");
    }

    #[test]
    fn fig3b_optimum_frequency_vanishes_at_ninety() {
        let tab = preset(Preset::Fig3b, FixedLoForm::Consistent).unwrap();
        let last = tab.rows.last().unwrap();
        assert_eq!(last[0], 90.0);
        assert!(last[1] < 1e-3);
        let first = &tab.rows[0];
        assert!(first[1] > 0.1);
        // away from 90 deg the level does not depend on d
        assert!((first[2] - first[3]).abs() < 0.05, "{first:?}");
    }

    #[test]
    fn axis_sweep() {
        let t = sweep(&SweepTemplate::default(), SweepAxis::Omega, &[0.0, 1.0]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0][2] < t.rows[1][2]);
        assert!("x".parse::<SweepAxis>().is_err());
        assert_eq!("T".parse::<SweepAxis>().unwrap(), SweepAxis::T);
    }
}
