//! Linearized fluctuation theory: eigensystem, rotating-frame spectra, brackets.

use num_complex::Complex64;
use opo::analytics::{analyze_full_linear, bright_dark_spectra, dark_quadrature_spectrum, eigensystem, poisson_brackets, to_db};

fn main() -> opo::Result<()> {
    let sigma = std::f64::consts::SQRT_2;
    let e = eigensystem(sigma)?;
    println!("eigenvalues {:?}", e.values);

    let full = analyze_full_linear(sigma, 1.0)?;
    println!("6x6: goldstone residual {:.1e}, dark phase residual {:.1e}", full.goldstone_residual, full.dark_phase_residual);

    println!("omega   X_b      Y_b      X_d   Y_d      V(45deg) dB");
    for w in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let s = bright_dark_spectra(w, sigma)?;
        let v45 = dark_quadrature_spectrum(w, std::f64::consts::FRAC_PI_4);
        println!("{w:<7} {:<8.4} {:<8.4} {:<5} {:<8.4} {:.2}", s.x_bright, s.y_bright, s.x_dark, s.y_dark, to_db(v45));
    }

    let rho = (sigma - 1.0).sqrt();
    let b = poisson_brackets(Complex64::new(rho, 0.0), Complex64::new(rho, 0.0), std::f64::consts::FRAC_PI_2)?;
    println!("brackets at phi = 90 deg: {{X, X'}} = {:.2e}, {{X, theta}} = {:.4}", b.xx, b.x_theta);
    Ok(())
}
