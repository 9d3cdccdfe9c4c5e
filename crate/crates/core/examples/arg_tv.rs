//! Total variation of the argument along companion eigenvalue branches.

use hypstab::fixtures;
use hypstab::resolvent::{self, CompanionBranch, TvConfig};
use num_complex::Complex64;

fn main() -> hypstab::Result<()> {
    let cfg = TvConfig::default();
    let bound = 6.0 * std::f64::consts::PI;
    let one = Complex64::new(1.0, 0.0);
    let up = fixtures::upwind(1.0, 0.5);
    let lf = fixtures::lax_friedrichs(1.0, 0.5);
    let leap = fixtures::leapfrog(1.0, 0.5);
    let z_glance = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_6);
    let cases = [
        ("upwind mu = 1", CompanionBranch { scheme: &up, z_bar: one, mu_bar: one, unstable: false }),
        ("lax-friedrichs mu = 1", CompanionBranch { scheme: &lf, z_bar: one, mu_bar: one, unstable: false }),
        ("leap-frog mu = i, leaving", CompanionBranch { scheme: &leap, z_bar: z_glance, mu_bar: Complex64::i(), unstable: true }),
        ("leap-frog mu = i, entering", CompanionBranch { scheme: &leap, z_bar: z_glance, mu_bar: Complex64::i(), unstable: false }),
    ];
    println!("bound 6 pi = {bound:.4}");
    for (name, b) in &cases {
        let r = resolvent::arg_total_variation(b, &cfg)?;
        let row: Vec<String> = r.per_gamma.iter().map(|g| format!("{:.0e}: {:.3}", g.gamma, g.sup_tv)).collect();
        println!("{name:<28} {}", row.join("  "));
    }
    Ok(())
}
