//! Companion eigenvalues at points of the unit circle.

use hypstab::{fixtures, resolvent};
use num_complex::Complex64;

fn main() -> hypstab::Result<()> {
    let one = Complex64::new(1.0, 0.0);
    for (name, s, z) in [
        ("upwind", fixtures::upwind(1.0, 0.5), one),
        ("lax-friedrichs", fixtures::lax_friedrichs(1.0, 0.5), one),
        ("lax-wendroff", fixtures::lax_wendroff(1.0, 0.5), one),
        ("leap-frog", fixtures::leapfrog(1.0, 0.5), Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_6)),
    ] {
        println!("{name} at z = {z:.4}");
        for b in resolvent::classify_boundary_blocks(&s, z)? {
            println!("    mu {:.6}  |mu| {:.6}  {:?}  stable side {}", b.eigenvalue, b.eigenvalue.norm(), b.kind, b.stable_side);
        }
    }
    Ok(())
}
