//! Kreiss-Lopatinskii determinant scans for several boundary closures.

use hypstab::resolvent::{self, CompanionMatrix, SchemeBoundary};
use hypstab::{fixtures, linalg::CMat, SchemeDef};

fn main() -> hypstab::Result<()> {
    let radii = [1e-1, 1e-2, 1e-3, 1e-4];
    let cases = [
        ("upwind, Dirichlet", fixtures::upwind(1.0, 0.5)),
        ("lax-friedrichs, Dirichlet", fixtures::lax_friedrichs(1.0, 0.5)),
        ("lax-wendroff, extrapolation", fixtures::lax_wendroff(1.0, 0.5).with_extrapolation()),
        ("leap-frog, Dirichlet", fixtures::leapfrog(1.0, 0.5)),
    ];
    for (name, s) in &cases {
        let scan = resolvent::uklc_scan(s, &radii, 256, 1e-6, &SchemeBoundary)?;
        println!("{name:<28} min |Delta| {:.4e}  decay exponent {:+.3}  plausible {}", scan.min_abs, scan.decay_exponent, scan.plausible);
        for (d, m) in &scan.min_by_radius {
            println!("    delta {d:.0e}: {m:.6e}");
        }
    }

    let zero = |s: &SchemeDef, c: &CompanionMatrix| -> hypstab::Result<CMat> {
        Ok(CMat::zeros(s.dim() * s.left_width(), c.matrix.nrows()))
    };
    let scan = resolvent::uklc_scan(&cases[0].1, &radii, 64, 1e-6, &zero)?;
    println!("zero boundary rows: min |Delta| {}", scan.min_abs);
    Ok(())
}
