//! Classical steady state and the rotated two-lobe pattern it produces.

use opo::classical::{bright_pattern, residual, steady_state, CartesianGrid};

fn main() -> opo::Result<()> {
    let sigma = std::f64::consts::SQRT_2;
    for theta in [0.0, 0.4, 1.2] {
        let s = steady_state(sigma, theta)?;
        let r = residual(s.beta0, s.beta_plus, s.beta_minus, sigma);
        let res = r.iter().map(|z| z.norm()).fold(0.0, f64::max);

        let grid = CartesianGrid::default_for(1.0);
        let pts = grid.points();
        let field = bright_pattern(sigma, theta, 1.0, &pts)?;
        let (i, _) = field.iter().enumerate().max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr())).unwrap();
        let (x, y) = pts[i];
        let lobe = y.atan2(x).rem_euclid(std::f64::consts::PI);
        println!("theta {theta:.2}: residual {res:.1e}, brightest lobe at {lobe:.3} rad (mod pi)");
    }
    Ok(())
}
