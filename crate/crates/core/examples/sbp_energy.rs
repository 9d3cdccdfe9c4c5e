//! Summation-by-parts identities and the energy decomposition of one-step schemes.

use hypstab::{fixtures, sbp, GridSequence};
use num_complex::Complex64;

fn main() -> hypstab::Result<()> {
    for k in 1..=4 {
        let h = sbp::hermitian_table(k)?;
        print!("order {k}: alpha {:?}", h.alpha);
        if k >= 2 {
            print!("  beta {:?}", sbp::skew_table(k)?.beta);
        }
        println!();
    }

    let u = GridSequence::from_fn(1, -3, 12, |j, out| out[0] = Complex64::new((0.7 * j as f64).sin() + 0.1 * j as f64, 0.0));
    for (name, s) in [
        ("upwind", fixtures::upwind(1.0, 0.5)),
        ("lax-friedrichs", fixtures::lax_friedrichs(1.0, 0.5)),
        ("lax-wendroff", fixtures::lax_wendroff(1.0, 0.5)),
    ] {
        let dec = sbp::energy_decomposition(&s)?;
        let bal = sbp::energy_balance_step(&s, &dec, &u)?;
        let rate = sbp::boundary_energy_rate(&s, &dec)?;
        println!(
            "{name:<15} d1 {:+.6} d2 {:+.6}  balance residual {:.1e}  boundary rate lambda_max {:.6}",
            dec.d1.unwrap_or(f64::NAN),
            dec.d2.unwrap_or(f64::NAN),
            bal.residual,
            rate.max_eigenvalue
        );
    }
    Ok(())
}
