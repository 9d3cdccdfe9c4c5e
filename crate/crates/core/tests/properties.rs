use std::f64::consts::PI;

use hypstab::resolvent;
use hypstab::sim::{self, Forcing, ProfileGenerator};
use hypstab::{fixtures, linalg, symbol, wavepacket, SchemeDef};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stable_fixture(which: usize, la: f64) -> SchemeDef {
    match which {
        0 => fixtures::upwind(1.0, la),
        1 => fixtures::lax_friedrichs(1.0, la),
        2 => fixtures::lax_wendroff(1.0, la),
        _ => fixtures::leapfrog(1.0, la.min(0.95)),
    }
}

fn random_system(seed: u64) -> SchemeDef {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SchemeDef::zeros(2, 1, 1, 0, 2, 0.5).unwrap();
    for lag in 0..=2 {
        for ell in -1..=1 {
            s.set_interior(ell, lag, DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        }
    }
    s
}

fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_rows_are_a_shifted_identity(seed in 0u64..10_000, eta in 0.0f64..(2.0 * PI), rad in 0.2f64..3.0) {
        let s = random_system(seed);
        let m = symbol::amplification_matrix(&s, Complex64::from_polar(rad, eta));
        let n = s.dim();
        for i in n..m.nrows() {
            for j in 0..m.ncols() {
                let want = if j + n == i { 1.0 } else { 0.0 };
                prop_assert_eq!(m[(i, j)], Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn tracked_branches_reproduce_direct_spectra(which in 0usize..4, la in 0.05f64..1.0) {
        let s = stable_fixture(which, la);
        let branches = symbol::track_branches(&s, 128).unwrap();
        for k in 0..128 {
            let tracked: Vec<Complex64> = branches.iter().map(|b| b.values[k]).collect();
            let eta = branches[0].etas[k];
            let direct = linalg::eigenvalues(&symbol::amplification_matrix(&s, Complex64::from_polar(1.0, eta))).unwrap();
            prop_assert!(multiset_distance(&tracked, &direct) <= 1e-8);
            prop_assert!(tracked.iter().all(|z| z.norm() <= 1.0 + 1e-8));
        }
    }

    #[test]
    fn unit_branches_have_real_phase_velocity(la in 0.05f64..0.95, xi in 0.0f64..(2.0 * PI), branch in 0usize..2) {
        let s = fixtures::leapfrog(1.0, la);
        let z = symbol::branch_value(&s, xi, branch).unwrap();
        let d = symbol::local_derivative(&s, xi, z).unwrap();
        let omega_prime = Complex64::from_polar(1.0, xi) * d.value / d.z;
        prop_assert!(omega_prime.im.abs() <= 1e-8, "{}", omega_prime);
    }

    #[test]
    fn splits_count_and_avoid_zero(which in 0usize..4, rad in 1.0001f64..3.0, th in 0.0f64..(2.0 * PI)) {
        let s = stable_fixture(which, 0.5);
        let comp = resolvent::assemble_companion(&s, Complex64::from_polar(rad, th)).unwrap();
        let split = resolvent::spectral_split(&comp, &s).unwrap();
        prop_assert_eq!(split.stable_basis.ncols(), s.dim() * s.left_width());
        prop_assert_eq!(split.unstable_basis.ncols(), s.dim() * s.right_width());
        prop_assert!(split.eigenvalues.iter().all(|m| m.norm() > 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn half_line_solution_splits_exactly(which in 0usize..5, seed in 0u64..1_000_000) {
        let s = match which {
            4 => fixtures::lax_wendroff(1.0, 0.5).with_extrapolation(),
            w => stable_fixture(w, 0.5),
        };
        let dx = 1.0 / 16.0;
        let f = ProfileGenerator::decaying(seed, 4, 3.0).layers(&s, dx);
        let split = sim::split_solution(&s, &f, 40, dx).unwrap();
        let scale = split.u.iter().map(|u| u.norm_sqr().sqrt()).fold(1.0, f64::max);
        prop_assert!(split.mismatch <= 1e-12 * scale, "{}", split.mismatch);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accumulators_decrease_in_gamma(which in 0usize..3, seed in 0u64..10_000, p in 0i64..4) {
        let s = stable_fixture(which, 0.7);
        let dx = 1.0 / 32.0;
        let f = ProfileGenerator::decaying(seed, 5, 4.0).layers(&s, dx);
        let rec = sim::record_run(&s, &f, 96, dx, 3, 0, Forcing::default(), |_, _| Ok(())).unwrap();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for gamma in [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let ns = sim::accumulate_norms(&rec, gamma, p, 0).unwrap();
            prop_assert!(ns.interior <= prev.0 && ns.trace <= prev.1);
            for (a, b) in ns.running.iter().zip(ns.running.iter().skip(1)) {
                prop_assert!(b.0 >= a.0 && b.1 >= a.1);
            }
            prev = (ns.interior, ns.trace);
        }
    }

    #[test]
    fn discrete_transform_of_packet_data(xi_bar in -PI..PI, offset in -0.9f64..0.9) {
        let env = wavepacket::make_envelope(2.0, 2048).unwrap();
        let dx = 0.125;
        let r = env.support_radius(1e-14);
        let (lhs, rhs) = wavepacket::poisson_pair(&env, xi_bar, dx, xi_bar / dx + offset, r);
        prop_assert!((lhs - rhs).norm() <= 1e-8 * env.hat(0.0));
    }
}
