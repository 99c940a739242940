//! Fixed local oscillator: optimal detection time and the phase sensitivity near 90 degrees.

use opo::analytics::{fixed_lo_spectrum_composed, fixed_lo_spectrum_with, optimal_detection_time, optimal_noise_frequency, to_db, FixedLoForm};

fn main() -> opo::Result<()> {
    let sigma = std::f64::consts::SQRT_2;
    for d in [1e-6, 1e-10, 1e-13] {
        let t = optimal_detection_time(sigma, d)?;
        let v = fixed_lo_spectrum_with(0.0, std::f64::consts::FRAC_PI_2, t, d, sigma, FixedLoForm::Consistent);
        println!("d {d:.0e}: T_opt {t:.4e}, V {:.2} dB", to_db(v));
    }

    let d = 1e-10;
    let t = optimal_detection_time(sigma, d)?;
    for phi_deg in [80.0f64, 88.0, 89.5, 90.0] {
        let phi = phi_deg.to_radians();
        let w = optimal_noise_frequency(phi, sigma, d)?;
        let v = fixed_lo_spectrum_with(w, phi, t, d, sigma, FixedLoForm::Consistent);
        println!("phi {phi_deg:>5}: best omega {w:.4}, V {:.2} dB", to_db(v));
    }

    // closed form against a direct double sum of the correlations
    let (d, t) = (1e-4, 50.0);
    for w in [0.0, 1.0, 3.0] {
        let closed = fixed_lo_spectrum_with(w, 1.5, t, d, sigma, FixedLoForm::Consistent);
        let direct = fixed_lo_spectrum_composed(w, 1.5, t, d, sigma, 0.05)?;
        println!("omega {w}: closed form {closed:.5}, double sum {direct:.5}");
    }
    Ok(())
}
