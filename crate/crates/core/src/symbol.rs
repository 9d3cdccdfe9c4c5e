//! Amplification matrices, von Neumann checks and eigenvalue branches on the unit circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::scheme::SchemeDef;

/// Default number of samples on `[0, 2 pi)` used when a routine tracks branches itself.
pub const DEFAULT_ETA_SAMPLES: usize = 512;
/// Samples within this distance of the unit circle count as unit-modulus.
pub const UNIT_TOL: f64 = 1e-8;

const MAX_BISECTION_DEPTH: usize = 20;
const DIFF_STEP: f64 = 1e-3;

pub fn eta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Block companion matrix of size `N(s+1)`: first block row holds the symbols
/// `sum_shift kappa^shift A[shift, lag]`, identity blocks sit on the subdiagonal.
pub fn amplification_matrix(scheme: &SchemeDef, kappa: Complex64) -> CMat {
    let n = scheme.dim();
    let levels = scheme.extra_levels() + 1;
    let mut m = CMat::zeros(n * levels, n * levels);
    for lag in 0..levels {
        let blk = scheme.symbol_block(lag, kappa);
        m.view_mut((0, lag * n), (n, n)).copy_from(&blk);
    }
    for k in 1..levels {
        for i in 0..n {
            m[(k * n + i, (k - 1) * n + i)] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

/// `d/dkappa` of the amplification matrix.
pub fn amplification_derivative(scheme: &SchemeDef, kappa: Complex64) -> CMat {
    let n = scheme.dim();
    let levels = scheme.extra_levels() + 1;
    let mut m = CMat::zeros(n * levels, n * levels);
    for lag in 0..levels {
        for shift in scheme.shifts() {
            let w = shift as f64 * kappa.powi(shift as i32 - 1);
            let a = scheme.interior(shift, lag);
            for i in 0..n {
                for j in 0..n {
                    m[(i, lag * n + j)] += w * a[(i, j)];
                }
            }
        }
    }
    m
}

fn kappa_of(eta: f64) -> Complex64 {
    Complex64::from_polar(1.0, eta)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VonNeumannReport {
    pub pass: bool,
    pub max_radius: f64,
    pub worst_eta: f64,
    pub tolerance: f64,
    pub samples: usize,
}

/// Spectral radius of the amplification matrix on a uniform `eta` grid.
/// Ties for the worst sample go to the smallest `eta`.
pub fn von_neumann_check(scheme: &SchemeDef, n_eta: usize, tol: f64) -> Result<VonNeumannReport> {
    if n_eta == 0 {
        return Err(Error::InvalidInput("empty eta grid".into()));
    }
    let etas = eta_grid(n_eta);
    let radii: Vec<f64> = etas
        .par_iter()
        .map(|&eta| linalg::spectral_radius(&amplification_matrix(scheme, kappa_of(eta))))
        .collect::<Result<_>>()?;
    let (mut worst, mut max_radius) = (0, radii[0]);
    for (k, &rho) in radii.iter().enumerate() {
        if rho > max_radius {
            worst = k;
            max_radius = rho;
        }
    }
    Ok(VonNeumannReport {
        pass: max_radius <= 1.0 + tol,
        max_radius,
        worst_eta: etas[worst],
        tolerance: tol,
        samples: n_eta,
    })
}

/// Largest `||Q_hat(eta)||_2` over the grid; the l2 operator norm of a one-step scheme.
pub fn max_symbol_norm(scheme: &SchemeDef, n_eta: usize) -> f64 {
    eta_grid(n_eta)
        .par_iter()
        .map(|&eta| linalg::spectral_norm(&amplification_matrix(scheme, kappa_of(eta))))
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerBound {
    /// `sup_{eta, n <= n_max} ||A(eta)^n||_2`.
    pub constant: f64,
    pub diverged: bool,
    pub worst_eta: f64,
    pub worst_power: usize,
}

const DIVERGENCE_LIMIT: f64 = 1e12;

pub fn power_bound_estimate(scheme: &SchemeDef, n_eta: usize, n_max: usize) -> Result<PowerBound> {
    if n_eta == 0 {
        return Err(Error::InvalidInput("empty eta grid".into()));
    }
    let etas = eta_grid(n_eta);
    let per_eta: Vec<(f64, usize, bool)> = etas
        .par_iter()
        .map(|&eta| {
            let a = amplification_matrix(scheme, kappa_of(eta));
            let mut power = CMat::identity(a.nrows(), a.ncols());
            let (mut best, mut best_n) = (1.0, 0);
            for n in 1..=n_max {
                power = &power * &a;
                let nrm = linalg::spectral_norm(&power);
                if nrm > best {
                    best = nrm;
                    best_n = n;
                }
                if !nrm.is_finite() || nrm > DIVERGENCE_LIMIT {
                    return (nrm, n, true);
                }
            }
            (best, best_n, false)
        })
        .collect();
    let mut out = PowerBound { constant: 0.0, diverged: false, worst_eta: 0.0, worst_power: 0 };
    for (k, &(c, n, div)) in per_eta.iter().enumerate() {
        if c > out.constant || (div && !out.diverged) {
            out.constant = c;
            out.worst_eta = etas[k];
            out.worst_power = n;
        }
        out.diverged |= div;
    }
    Ok(out)
}

/// One eigenvalue of the amplification matrix followed continuously along `eta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenBranch {
    pub index: usize,
    pub etas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Whether continuing past `2 pi` lands back on this branch's first sample.
    pub periodic: bool,
}

impl EigenBranch {
    pub fn step(&self) -> f64 {
        2.0 * PI / self.etas.len() as f64
    }

    pub fn nearest_sample(&self, eta: f64) -> usize {
        let t = eta.rem_euclid(2.0 * PI) / self.step();
        (t.round() as usize) % self.etas.len()
    }
}

fn sorted_eigenvalues(scheme: &SchemeDef, eta: f64) -> Result<Vec<Complex64>> {
    let mut ev = linalg::eigenvalues(&amplification_matrix(scheme, kappa_of(eta)))?;
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(ev)
}

fn reorder(raw: &[Complex64], perm: &[usize]) -> Vec<Complex64> {
    perm.iter().map(|&k| raw[k]).collect()
}

/// Order `raw_b` (eigenvalues at `eta_b`) to continue `vals_a`, bisecting the
/// step when the assignment is ambiguous.
fn link(
    scheme: &SchemeDef,
    (eta_a, vals_a, slope_a): (f64, &[Complex64], Option<&[Complex64]>),
    eta_b: f64,
    raw_b: &[Complex64],
    depth: usize,
) -> Result<Vec<Complex64>> {
    let pred: Vec<Complex64> = match slope_a {
        Some(s) => vals_a.iter().zip(s).map(|(v, d)| v + d * (eta_b - eta_a)).collect(),
        None => vals_a.to_vec(),
    };
    let (perm, best, second) = linalg::match_values(&pred, raw_b);
    if second > 2.0 * best + 1e-13 {
        return Ok(reorder(raw_b, &perm));
    }
    let mid = 0.5 * (eta_a + eta_b);
    if depth >= MAX_BISECTION_DEPTH {
        return Err(Error::UnresolvedCrossing { eta: mid });
    }
    let raw_m = sorted_eigenvalues(scheme, mid)?;
    let vals_m = link(scheme, (eta_a, vals_a, slope_a), mid, &raw_m, depth + 1)?;
    let slope_m: Vec<Complex64> =
        vals_m.iter().zip(vals_a).map(|(m, a)| (m - a) / (mid - eta_a)).collect();
    link(scheme, (mid, &vals_m, Some(&slope_m)), eta_b, raw_b, depth + 1)
}

/// Eigenvalue branches of the amplification matrix on a uniform grid of `[0, 2 pi)`.
///
/// Consecutive samples are matched by minimum total displacement against a
/// linear prediction; ambiguous steps are bisected up to depth 20 and an
/// unresolved crossing is reported as an error.
pub fn track_branches(scheme: &SchemeDef, n_eta: usize) -> Result<Vec<EigenBranch>> {
    if n_eta < 5 {
        return Err(Error::InvalidInput("at least 5 eta samples are needed".into()));
    }
    let etas = eta_grid(n_eta);
    let raw: Vec<Vec<Complex64>> =
        etas.par_iter().map(|&e| sorted_eigenvalues(scheme, e)).collect::<Result<_>>()?;
    let m = raw[0].len();
    let mut rows: Vec<Vec<Complex64>> = vec![raw[0].clone()];
    let mut slope: Option<Vec<Complex64>> = None;
    for k in 1..=n_eta {
        let (eta_b, raw_b) = if k < n_eta {
            (etas[k], raw[k].clone())
        } else {
            (2.0 * PI, raw[0].clone())
        };
        let prev = rows.last().unwrap().clone();
        let next = link(scheme, (etas[k - 1], &prev, slope.as_deref()), eta_b, &raw_b, 0)?;
        let h = eta_b - etas[k - 1];
        slope = Some(next.iter().zip(&prev).map(|(b, a)| (b - a) / h).collect());
        rows.push(next);
    }
    let closing = rows.pop().unwrap();
    Ok((0..m)
        .map(|b| EigenBranch {
            index: b,
            etas: etas.clone(),
            values: rows.iter().map(|r| r[b]).collect(),
            periodic: (closing[b] - rows[0][b]).norm() <= 1e-9 * (1.0 + rows[0][b].norm()),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    /// `d zeta / d kappa` at `kappa = e^{i eta}`.
    pub value: Complex64,
    pub error: f64,
}

/// `zeta'(kappa)` from the sampled branch by Richardson-extrapolated central differences.
pub fn branch_derivative(branch: &EigenBranch, eta: f64) -> Result<DerivativeEstimate> {
    let n = branch.etas.len();
    if n < 5 {
        return Err(Error::InvalidInput("branch too coarsely sampled".into()));
    }
    let k = branch.nearest_sample(eta);
    let h = branch.step();
    let off = (eta.rem_euclid(2.0 * PI) - k as f64 * h + PI).rem_euclid(2.0 * PI) - PI;
    if off.abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("eta = {eta} is not a sample of the branch")));
    }
    if !branch.periodic && (k < 2 || k + 2 >= n) {
        return Err(Error::InvalidInput("stencil crosses the seam of a non-periodic branch".into()));
    }
    let at = |d: i64| branch.values[(k as i64 + d).rem_euclid(n as i64) as usize];
    let d1 = (at(1) - at(-1)) / (2.0 * h);
    let d2 = (at(2) - at(-2)) / (4.0 * h);
    let d = (4.0 * d1 - d2) / 3.0;
    let ik = Complex64::i() * kappa_of(branch.etas[k]);
    Ok(DerivativeEstimate { value: d / ik, error: (d - d1).norm() })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalDerivative {
    pub z: Complex64,
    pub value: Complex64,
    pub error: f64,
}

fn nearest(ev: &[Complex64], z: Complex64) -> Complex64 {
    *ev.iter().min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm())).unwrap()
}

/// `zeta'(kappa)` of the eigenvalue nearest `z_hint`, from fresh eigen-solves around `eta`.
pub fn local_derivative(scheme: &SchemeDef, eta: f64, z_hint: Complex64) -> Result<LocalDerivative> {
    let ev = |e: f64| linalg::eigenvalues(&amplification_matrix(scheme, kappa_of(e)));
    let z = nearest(&ev(eta)?, z_hint);
    let h = DIFF_STEP;
    let side = |sgn: f64| -> Result<(Complex64, Complex64)> {
        let z1 = nearest(&ev(eta + sgn * h)?, z);
        let z2 = nearest(&ev(eta + 2.0 * sgn * h)?, z1);
        Ok((z1, z2))
    };
    let (p1, p2) = side(1.0)?;
    let (m1, m2) = side(-1.0)?;
    let d1 = (p1 - m1) / (2.0 * h);
    let d2 = (p2 - m2) / (4.0 * h);
    let d = (4.0 * d1 - d2) / 3.0;
    let ik = Complex64::i() * kappa_of(eta);
    Ok(LocalDerivative { z, value: d / ik, error: (d - d1).norm() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlancingHit {
    pub branch: usize,
    pub eta: f64,
    pub kappa: Complex64,
    pub z: Complex64,
    pub derivative_abs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlancingReport {
    pub hits: Vec<GlancingHit>,
    /// Smallest `|zeta'|` seen at unit-modulus points (after refinement).
    pub min_unit_derivative: f64,
    pub tolerance: f64,
    pub non_glancing: bool,
}

fn golden_min(mut a: f64, mut b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Unit-modulus eigenvalues with vanishing `zeta'(kappa)` on `|kappa| = 1`.
pub fn find_glancing(scheme: &SchemeDef, tol: f64) -> Result<GlancingReport> {
    let branches = track_branches(scheme, DEFAULT_ETA_SAMPLES)?;
    let mut hits = Vec::new();
    let mut min_unit = f64::INFINITY;
    for br in &branches {
        let n = br.etas.len();
        let unit: Vec<bool> = br.values.iter().map(|z| (z.norm() - 1.0).abs() <= UNIT_TOL).collect();
        let mut deriv = vec![f64::INFINITY; n];
        for k in 0..n {
            if unit[k] {
                deriv[k] = local_derivative(scheme, br.etas[k], br.values[k])?.value.norm();
                min_unit = min_unit.min(deriv[k]);
            }
        }
        for k in 0..n {
            if !unit[k] {
                continue;
            }
            let left = deriv[(k + n - 1) % n];
            let right = deriv[(k + 1) % n];
            if deriv[k] > left || deriv[k] > right {
                continue;
            }
            let h = br.step();
            let z0 = br.values[k];
            let mut obj = |e: f64| {
                local_derivative(scheme, e, z0).map(|d| d.value.norm()).unwrap_or(f64::INFINITY)
            };
            let (eta, val) = golden_min(br.etas[k] - h, br.etas[k] + h, &mut obj);
            let ld = local_derivative(scheme, eta, z0)?;
            if (ld.z.norm() - 1.0).abs() > 1e-6 {
                continue;
            }
            min_unit = min_unit.min(val);
            let eta = eta.rem_euclid(2.0 * PI);
            if val < tol && !hits.iter().any(|h: &GlancingHit| h.branch == br.index && (h.eta - eta).abs() < 1e-6) {
                hits.push(GlancingHit { branch: br.index, eta, kappa: kappa_of(eta), z: ld.z, derivative_abs: val });
            }
        }
    }
    Ok(GlancingReport { non_glancing: hits.is_empty(), hits, min_unit_derivative: min_unit, tolerance: tol })
}

/// Eigenvalue of branch `branch` at `eta`, continued from the nearest grid sample.
pub fn branch_value(scheme: &SchemeDef, eta: f64, branch: usize) -> Result<Complex64> {
    let branches = track_branches(scheme, DEFAULT_ETA_SAMPLES)?;
    let br = branches
        .get(branch)
        .ok_or_else(|| Error::InvalidInput(format!("no branch {branch}")))?;
    let k = br.nearest_sample(eta);
    let mut z = br.values[k];
    let start = br.etas[k];
    let delta = (eta.rem_euclid(2.0 * PI) - start + PI).rem_euclid(2.0 * PI) - PI;
    let steps = 8;
    for i in 1..=steps {
        let e = start + delta * i as f64 / steps as f64;
        z = nearest(&linalg::eigenvalues(&amplification_matrix(scheme, kappa_of(e)))?, z);
    }
    Ok(z)
}

/// `v = -omega'(xi) / lambda` where `zeta(e^{i xi}) = e^{i omega(xi)}` on the chosen branch.
pub fn group_velocity(scheme: &SchemeDef, xi: f64, branch: usize) -> Result<f64> {
    let z = branch_value(scheme, xi, branch)?;
    if (z.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitModulus { xi, modulus: z.norm() });
    }
    let d = local_derivative(scheme, xi, z)?;
    let omega_prime = kappa_of(xi) * d.value / d.z;
    Ok(-omega_prime.re / scheme.mesh_ratio())
}

/// Rank-one spectral projector onto the eigenvector of a simple eigenvalue `z`.
#[derive(Debug, Clone)]
pub struct EigenProjector {
    pub right: CVec,
    pub left: CVec,
    pub projector: CMat,
}

pub fn eigen_projector(scheme: &SchemeDef, kappa: Complex64, z: Complex64) -> EigenProjector {
    let a = amplification_matrix(scheme, kappa);
    let shifted = &a - CMat::identity(a.nrows(), a.ncols()) * z;
    let right = linalg::null_vector(&shifted);
    let left = linalg::null_vector(&shifted.adjoint());
    let denom = left.dotc(&right);
    let projector = &right * left.adjoint() / denom;
    EigenProjector { right, left, projector }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::c;

    #[test]
    fn leapfrog_amplification_at_i() {
        let a = amplification_matrix(&fixtures::leapfrog(1.0, 0.5), Complex64::i());
        let want = CMat::from_row_slice(2, 2, &[c(0.0, -1.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((a - want).norm() < 1e-15);
    }

    #[test]
    fn upwind_von_neumann() {
        let ok = von_neumann_check(&fixtures::upwind(1.0, 0.5), 256, 1e-10).unwrap();
        assert!(ok.pass);
        assert_eq!(ok.worst_eta, 0.0);
        assert!((ok.max_radius - 1.0).abs() < 1e-14);
        let bad = von_neumann_check(&fixtures::upwind(1.0, 1.01), 256, 1e-10).unwrap();
        assert!(!bad.pass);
        assert!((bad.worst_eta - PI).abs() < 1e-12);
        assert!((bad.max_radius - 1.02).abs() < 1e-12);
    }

    #[test]
    fn power_bounds() {
        let up = power_bound_estimate(&fixtures::upwind(1.0, 0.5), 64, 200).unwrap();
        assert!((up.constant - 1.0).abs() < 1e-12 && !up.diverged);
        let lf = power_bound_estimate(&fixtures::leapfrog(1.0, 0.5), 64, 10_000).unwrap();
        assert!(!lf.diverged && lf.constant < 10.0, "{lf:?}");
        let bad = power_bound_estimate(&fixtures::lax_friedrichs(1.0, 1.5), 64, 2000).unwrap();
        assert!(bad.diverged);
    }

    #[test]
    fn branch_derivatives_match_closed_forms() {
        let up = track_branches(&fixtures::upwind(1.0, 0.5), 512).unwrap();
        let d = branch_derivative(&up[0], 0.0).unwrap();
        assert!((d.value - c(-0.5, 0.0)).norm() < 1e-6);
        let lf = track_branches(&fixtures::leapfrog(1.0, 0.5), 512).unwrap();
        let d = branch_derivative(&lf[0], PI / 2.0).unwrap();
        assert!(d.value.norm() < 1e-6);
    }

    #[test]
    fn derivative_agrees_with_eigenvector_formula() {
        let s = fixtures::leapfrog(1.0, 0.5);
        let branches = track_branches(&s, 512).unwrap();
        for br in &branches {
            for k in [3usize, 40, 77, 300] {
                let kappa = kappa_of(br.etas[k]);
                let ep = eigen_projector(&s, kappa, br.values[k]);
                let da = amplification_derivative(&s, kappa);
                let formula = ep.left.dotc(&(&da * &ep.right)) / ep.left.dotc(&ep.right);
                let fd = branch_derivative(br, br.etas[k]).unwrap();
                assert!((formula - fd.value).norm() < 1e-6, "{formula} vs {}", fd.value);
            }
        }
    }

    #[test]
    fn glancing_points() {
        let lf = find_glancing(&fixtures::leapfrog(1.0, 0.5), 1e-8).unwrap();
        assert!(!lf.non_glancing);
        for h in &lf.hits {
            assert!((h.kappa.re).abs() < 1e-8 && (h.kappa.im.abs() - 1.0).abs() < 1e-8);
        }
        assert!(lf.hits.iter().any(|h| h.kappa.im > 0.0));
        assert!(lf.hits.iter().any(|h| h.kappa.im < 0.0));
        for s in [fixtures::upwind(1.0, 0.5), fixtures::lax_friedrichs(1.0, 0.5), fixtures::lax_wendroff(1.0, 0.5)] {
            let r = find_glancing(&s, 1e-8).unwrap();
            assert!(r.non_glancing && r.min_unit_derivative > 0.1, "{r:?}");
        }
    }

    #[test]
    fn group_velocities() {
        assert!((group_velocity(&fixtures::upwind(1.0, 0.5), 0.0, 0).unwrap() - 0.5).abs() < 1e-8);
        assert!((group_velocity(&fixtures::upwind(0.8, 0.5), 0.0, 0).unwrap() - 0.5).abs() < 1e-8);
        assert!(group_velocity(&fixtures::leapfrog(1.0, 0.5), PI / 2.0, 0).unwrap().abs() < 1e-8);
        assert!(matches!(
            group_velocity(&fixtures::upwind(1.0, 0.5), PI / 2.0, 0),
            Err(Error::NotUnitModulus { .. })
        ));
    }
}
