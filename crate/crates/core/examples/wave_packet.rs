//! Geometric-optics packets: error under refinement and the trace experiment.

use std::f64::consts::PI;

use hypstab::fixtures;
use hypstab::wavepacket::{self, DEFAULT_QUADRATURE};

fn main() -> hypstab::Result<()> {
    let upwind = fixtures::upwind(1.0, 0.5);
    let env = wavepacket::make_envelope(2.0, DEFAULT_QUADRATURE)?;
    println!("a(0) = {:.6}, radius(1e-13) = {:.1}", env.peak, env.support_radius(wavepacket::ENVELOPE_TOL));

    let packet = wavepacket::make_packet(&upwind, 0.0, 0, env.clone())?;
    let t = std::time::Instant::now();
    let study = wavepacket::packet_error_refinement(&upwind, &packet, 1.0, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0])?;
    for r in &study.rows {
        println!("  dx {:.5}  sup error {:.3e}  C {:.4}", r.dx, r.error, r.fitted_c);
    }
    println!("halving ratios {:?}  ({:.2?})", study.halving_ratios, t.elapsed());

    let leapfrog = fixtures::leapfrog(1.0, 0.5);
    let glancing = wavepacket::make_packet(&leapfrog, PI / 2.0, 0, env.clone())?;
    let t = std::time::Instant::now();
    let ts = [2.0, 4.0, 6.0, 8.0, 12.0, 16.0];
    let rep = wavepacket::glancing_trace_experiment(&leapfrog, &glancing, &ts, &[1.0 / 16.0, 1.0 / 32.0])?;
    println!("leap-frog |zeta'| = {:.2e}, expected slope {:.5}", rep.derivative_abs, rep.expected_slope);
    for f in &rep.fits {
        println!("  dt {:.4}  slope {:.5}  R^2 {:.4}", f.dt, f.slope, f.r2);
    }
    println!("linear growth: {}  ({:.2?})", rep.linear_growth(0.9, 0.25), t.elapsed());

    let control = wavepacket::make_packet(&upwind, 0.0, 0, env)?;
    let rep = wavepacket::glancing_trace_experiment(&upwind, &control, &ts, &[1.0 / 16.0, 1.0 / 32.0])?;
    println!("upwind control: max trace/data {:.4}, doubling ratios {:?}", rep.max_ratio, rep.doubling_ratios);
    Ok(())
}
