//! Physical cavity setup to the three model parameters.

use opo::params::{derived_rates, dimensionless, pump_power_for_sigma, waist_radius, Branch, PhysicalSetup};

fn main() -> opo::Result<()> {
    let setup = PhysicalSetup::typical();
    let rates = derived_rates(&setup)?;
    let p = dimensionless(&setup, Some(&rates))?;
    println!("pump waist   {:.3e} m", waist_radius(&setup, Branch::Pump)?);
    println!("signal waist {:.3e} m", waist_radius(&setup, Branch::Signal)?);
    println!("gamma_p {:.4e} 1/s, gamma_s {:.4e} 1/s, chi {:.4e} 1/s", rates.gamma_p, rates.gamma_s, rates.chi);
    println!("sigma {:.6}, kappa {:.4}, g {:.4e}", p.sigma, p.kappa, p.g);
    println!("d = g^2/4 = {:.4e}, D = {:.4e}", p.d(), p.diffusion().unwrap_or(f64::NAN));
    for sigma in [1.1, 1.5, 2.0, 4.0] {
        println!("sigma {sigma}: laser power {:.4} W", pump_power_for_sigma(&setup, sigma)?);
    }
    Ok(())
}
