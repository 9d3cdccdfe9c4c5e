//! Half-line runs: exact truncation, the boundary/interior split and energy series.

use hypstab::sim::{self, Forcing, ProfileGenerator};
use hypstab::fixtures;

fn main() -> hypstab::Result<()> {
    let s = fixtures::lax_friedrichs(1.0, 0.5);
    let dx = 1.0 / 64.0;
    let f = ProfileGenerator::decaying(11, 8, 20.0).layers(&s, dx);

    let split = sim::split_solution(&s, &f, 200, dx)?;
    println!("U = V + W mismatch after 200 steps: {:.2e}", split.mismatch);

    let rec = sim::record_run(&s, &f, 640, dx, 3, 0, Forcing::default(), |_, _| Ok(()))?;
    for n in (0..=640).step_by(128) {
        println!("n {n:>3}  energy {:.6}  interior {:.6}  |U_1|^2 {:.3e}", dx * rec.energy[n], dx * rec.energy_interior[n], rec.rows[n][1]);
    }
    let ns = sim::accumulate_norms(&rec, 0.1, 3, 0)?;
    println!("gamma 0.1, P 3: weighted LHS {:.6}  data {:.6}", ns.weighted_lhs(), rec.data_norm);
    Ok(())
}
