//! Integrator and noise checks: increment moments, OU variance, Stratonovich
//! discrimination, and the Wiener phase correlations.

use opo::validation::{criterion6, criterion8};

fn main() -> opo::Result<()> {
    for (name, (pass, details)) in [("integrator", criterion6()?), ("wiener", criterion8()?)] {
        println!("{name}: {}", if pass { "PASS" } else { "FAIL" });
        for d in details {
            println!("  {d}");
        }
    }
    Ok(())
}
