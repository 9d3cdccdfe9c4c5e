//! Empirical trace, strong and semigroup estimates for upwind with a Dirichlet row.

use hypstab::fixtures;
use hypstab::sim::{self, EstimateConfig, ProfileGenerator};
use num_complex::Complex64;

fn main() -> hypstab::Result<()> {
    let scheme = fixtures::upwind(1.0, 0.5);
    let gen = ProfileGenerator::decaying(7, 8, 20.0);
    let data = |dx: f64| gen.layers(&scheme, dx);
    let cfg = EstimateConfig::default();

    let t = std::time::Instant::now();
    let trace = sim::verify_trace_estimate(&scheme, &data, &cfg)?;
    println!("trace estimate: {} (max ratio {:.4}, max slope {:.4}) in {:.2?}", trace.verdict, trace.max_ratio, trace.max_slope, t.elapsed());
    for s in &trace.slopes {
        println!("  gamma {:>7.0e}  P {:>2}  slope {:+.4}", s.gamma, s.p, s.slope);
    }

    let t = std::time::Instant::now();
    let semi = sim::verify_semigroup(&scheme, &data, &cfg)?;
    println!("semigroup: {} (slope {:.4}, per-step {}) in {:.2?}", semi.verdict, semi.slope, semi.per_step_holds, t.elapsed());
    for c in &semi.cells {
        println!("  dx {:.5}  C2 {:.4}  excess {:.2e}  chain {}", c.dx, c.c2, c.worst_step_excess, c.chain_holds);
    }

    let g = |t: f64, _j: i64, out: &mut [Complex64]| out[0] = Complex64::new((3.0 * t).sin() * (-t).exp(), 0.0);
    let t = std::time::Instant::now();
    let strong = sim::verify_strong_stability(&scheme, Some(&g), None, &cfg)?;
    println!("strong: {} (max ratio {:.4}, max slope {:.4}) in {:.2?}", strong.verdict, strong.max_ratio, strong.max_slope, t.elapsed());
    Ok(())
}
