//! Eigenvalue branches on the unit circle and glancing detection.

use hypstab::{fixtures, symbol};

fn main() -> hypstab::Result<()> {
    for (name, s) in [
        ("upwind", fixtures::upwind(1.0, 0.5)),
        ("lax-friedrichs", fixtures::lax_friedrichs(1.0, 0.5)),
        ("lax-wendroff", fixtures::lax_wendroff(1.0, 0.5)),
        ("leap-frog", fixtures::leapfrog(1.0, 0.5)),
    ] {
        let g = symbol::find_glancing(&s, 1e-8)?;
        println!("{name:<15} non-glancing {:<5}  min |zeta'| {:.3e}", g.non_glancing, g.min_unit_derivative);
        for h in &g.hits {
            println!("    branch {} eta {:.9} z {:.6} |zeta'| {:.2e}", h.branch, h.eta, h.z, h.derivative_abs);
        }
    }

    let lf = fixtures::leapfrog(1.0, 0.5);
    for (xi, branch) in [(0.0, 0), (0.0, 1), (std::f64::consts::FRAC_PI_2, 0)] {
        println!("leap-frog branch {branch} at xi = {xi:.4}: v = {:+.6}", symbol::group_velocity(&lf, xi, branch)?);
    }
    Ok(())
}
