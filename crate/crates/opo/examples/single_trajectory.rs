//! One stochastic trajectory of the reduced system, printing the pattern orientation.

use opo::classical::steady_state;
use opo::observables::{extract_theta, ThetaUnwrapper};
use opo::params::DimensionlessParams;
use opo::sde::{integrate_trajectory, trajectory_rng, FieldState, IntegratorConfig, ReducedModel, Signal, SystemKind};

fn main() -> opo::Result<()> {
    let p = DimensionlessParams::new(std::f64::consts::SQRT_2, 1.0, 0.05)?;
    let model = ReducedModel { p };
    let init = FieldState::from_steady_state(&steady_state(p.sigma, 0.0)?);
    let cfg = IntegratorConfig::from_tau_end(3e-3, 30.0, 2, SystemKind::Reduced)?;
    let mut rng = trajectory_rng(42, 0);
    let mut unwrap = ThetaUnwrapper::new();
    let mut obs = |step: u64, tau: f64, s: &Signal, _: &[_; 4]| {
        if step.is_multiple_of(1000) {
            if let Ok(raw) = extract_theta(s) {
                println!("tau {tau:6.2}  theta {:+.5}", unwrap.push(raw));
            }
        }
    };
    let out = integrate_trajectory(&model, &init, &cfg, &mut rng, &mut obs);
    println!("{:?}, expected rms drift sqrt(D tau_end) = {:.4}", out.status, (p.diffusion().unwrap() * 30.0).sqrt());
    Ok(())
}
