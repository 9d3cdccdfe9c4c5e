//! Von Neumann check and CFL recovery by bisection on `lambda a`.

use hypstab::{fixtures, sbp, symbol, SchemeDef};

fn bisect(stable: impl Fn(f64) -> bool, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() -> hypstab::Result<()> {
    let families: [(&str, fn(f64, f64) -> SchemeDef); 3] = [
        ("upwind", fixtures::upwind),
        ("lax-friedrichs", fixtures::lax_friedrichs),
        ("lax-wendroff", fixtures::lax_wendroff),
    ];
    for (name, make) in families {
        let vn = |la: f64| symbol::von_neumann_check(&make(1.0, la), 512, 1e-10).map(|r| r.pass).unwrap_or(false);
        let energy = |la: f64| {
            let s = make(1.0, la);
            let coef = |l: i64| if l >= -1 && l <= s.right_width() as i64 { s.interior(l, 0)[(0, 0)] } else { 0.0 };
            sbp::cauchy_criterion_3pt(coef(-1), coef(0), coef(1), 1e-12).map(|c| c.stable).unwrap_or(false)
        };
        println!("{name:<15} von Neumann edge {:.9}   d1/d2 edge {:.9}", bisect(vn, 0.1, 2.0), bisect(energy, 0.1, 2.0));
    }

    let lf = fixtures::leapfrog(1.0, 0.5);
    let r = symbol::von_neumann_check(&lf, 512, 1e-10)?;
    let pb = symbol::power_bound_estimate(&lf, 256, 400)?;
    println!("leap-frog: max radius {:.12}, sup ||A^n|| {:.4} (n <= 400)", r.max_radius, pb.constant);
    Ok(())
}
