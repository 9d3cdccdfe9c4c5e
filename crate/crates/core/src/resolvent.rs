//! Laplace-transformed (resolvent) form of the scheme: companion recurrence in
//! space, stable/unstable splitting, the Kreiss-Lopatinskii determinant and
//! boundary-block diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scheme::{resolvent_block, SchemeDef};

/// Leading-block condition numbers above this are treated as singular.
pub const COND_LIMIT: f64 = 1e12;
/// Eigenvalues of the companion matrix closer than this to the unit circle are rejected.
pub const UNIT_GAP: f64 = 1e-12;

/// Time-transformed interior and boundary coefficients at one `z`.
#[derive(Debug, Clone)]
pub struct ResolventCoeffs {
    pub z: Complex64,
    left_width: usize,
    /// Interior blocks for shifts `-r..=p`.
    pub interior: Vec<CMat>,
    /// `boundary[shift][row_index]` with `row_index = j + r - 1`.
    pub boundary: Vec<Vec<CMat>>,
}

impl ResolventCoeffs {
    pub fn interior_at(&self, shift: i64) -> &CMat {
        &self.interior[(shift + self.left_width as i64) as usize]
    }
    pub fn boundary_at(&self, shift: usize, row: i64) -> &CMat {
        &self.boundary[shift][(row + self.left_width as i64 - 1) as usize]
    }
}

pub fn resolvent_coeffs(scheme: &SchemeDef, z: Complex64) -> Result<ResolventCoeffs> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::InvalidInput(format!("z = {z} must be finite and nonzero")));
    }
    let interior = scheme.shifts().map(|l| resolvent_block(scheme, l, z)).collect();
    let n = scheme.dim();
    let boundary = (0..=scheme.boundary_width())
        .map(|shift| {
            scheme
                .boundary_rows()
                .map(|row| {
                    let mut acc = CMat::zeros(n, n);
                    for lag in -1..=scheme.extra_levels() as i64 {
                        let w = z.powi(-(lag as i32) - 1);
                        acc.zip_apply(scheme.boundary(shift, row, lag), |o, x| *o += w * x);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(ResolventCoeffs { z, left_width: scheme.left_width(), interior, boundary })
}

/// Spatial companion matrix of size `N(p+r)` acting on `(W_{j+p-1}, ..., W_{j-r})`.
#[derive(Debug, Clone)]
pub struct CompanionMatrix {
    pub z: Complex64,
    pub matrix: CMat,
    pub leading_condition: f64,
}

pub fn assemble_companion(scheme: &SchemeDef, z: Complex64) -> Result<CompanionMatrix> {
    let n = scheme.dim();
    let (r, p) = (scheme.left_width(), scheme.right_width());
    let k = p + r;
    if k == 0 {
        return Err(Error::Unsupported("stencil of width zero has no spatial recurrence".into()));
    }
    let coeffs = resolvent_coeffs(scheme, z)?;
    let lead = coeffs.interior_at(p as i64);
    let cond = linalg::condition_number(lead);
    let inv = match linalg::inverse(lead) {
        Some(inv) if cond <= COND_LIMIT => inv,
        _ => return Err(Error::SingularLeadingBlock { z: z.to_string(), cond }),
    };
    let mut m = CMat::zeros(n * k, n * k);
    for b in 0..k {
        let shift = p as i64 - 1 - b as i64;
        let blk = -(&inv * coeffs.interior_at(shift));
        m.view_mut((0, b * n), (n, n)).copy_from(&blk);
    }
    for b in 1..k {
        for i in 0..n {
            m[(b * n + i, (b - 1) * n + i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(CompanionMatrix { z, matrix: m, leading_condition: cond })
}

/// Invariant subspaces of the companion matrix inside and outside the unit disc.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub z: Complex64,
    pub eigenvalues: Vec<Complex64>,
    /// Orthonormal basis of the stable subspace (columns).
    pub stable_basis: CMat,
    /// Orthonormal basis of the unstable subspace (columns).
    pub unstable_basis: CMat,
    pub stable_projector: CMat,
    pub unstable_projector: CMat,
}

/// Split via ordered complex Schur factorisations. For `|z| > 1` there must be
/// exactly `N r` stable and `N p` unstable eigenvalues.
pub fn spectral_split(comp: &CompanionMatrix, scheme: &SchemeDef) -> Result<SpectralSplit> {
    let n = scheme.dim();
    let (exp_s, exp_u) = (n * scheme.left_width(), n * scheme.right_width());
    let (q0, t0) = linalg::schur(&comp.matrix)?;
    let eigenvalues: Vec<Complex64> = (0..t0.nrows()).map(|i| t0[(i, i)]).collect();
    let gap = eigenvalues.iter().map(|m| (m.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    if gap <= UNIT_GAP {
        return Err(Error::NearUnitCircle { z: comp.z.to_string(), gap });
    }
    let stable = eigenvalues.iter().filter(|m| m.norm() < 1.0).count();
    let unstable = eigenvalues.len() - stable;
    if stable != exp_s || unstable != exp_u {
        return Err(Error::CountMismatch {
            z: comp.z.to_string(),
            stable,
            unstable,
            expected_stable: exp_s,
            expected_unstable: exp_u,
        });
    }
    let (mut qs, mut ts) = (q0.clone(), t0.clone());
    linalg::reorder_schur(&mut qs, &mut ts, |m| m.norm() < 1.0);
    let (mut qu, mut tu) = (q0, t0);
    linalg::reorder_schur(&mut qu, &mut tu, |m| m.norm() > 1.0);
    let vs = qs.columns(0, stable).into_owned();
    let vu = qu.columns(0, unstable).into_owned();
    let dim = vs.nrows();
    let mut basis = CMat::zeros(dim, dim);
    basis.columns_mut(0, stable).copy_from(&vs);
    basis.columns_mut(stable, unstable).copy_from(&vu);
    let inv = linalg::inverse(&basis)
        .ok_or_else(|| Error::EigenFailure("stable and unstable subspaces are not complementary".into()))?;
    let ps = &vs * inv.rows(0, stable);
    let pu = &vu * inv.rows(stable, unstable);
    Ok(SpectralSplit {
        z: comp.z,
        eigenvalues,
        stable_basis: vs,
        unstable_basis: vu,
        stable_projector: ps,
        unstable_projector: pu,
    })
}

/// Source of the `N r x N(p+r)` boundary matrix acting on `(W_p, ..., W_{1-r})`.
pub trait BoundaryModel: Sync {
    fn rows(&self, scheme: &SchemeDef, comp: &CompanionMatrix) -> Result<CMat>;
}

/// The closure stored in the scheme itself.
pub struct SchemeBoundary;

impl BoundaryModel for SchemeBoundary {
    fn rows(&self, scheme: &SchemeDef, comp: &CompanionMatrix) -> Result<CMat> {
        boundary_matrix(scheme, comp)
    }
}

impl<F> BoundaryModel for F
where
    F: Fn(&SchemeDef, &CompanionMatrix) -> Result<CMat> + Sync,
{
    fn rows(&self, scheme: &SchemeDef, comp: &CompanionMatrix) -> Result<CMat> {
        self(scheme, comp)
    }
}

/// Boundary rows `W_j - sum_shift B_{shift,j}(z) W_{1+shift} = g_j` written in the
/// coordinates `(W_p, ..., W_{1-r})`. Values `W_m` with `m > p` are eliminated
/// with powers of the companion matrix, valid on interior-homogeneous solutions.
pub fn boundary_matrix(scheme: &SchemeDef, comp: &CompanionMatrix) -> Result<CMat> {
    let n = scheme.dim();
    let (r, p, q) = (scheme.left_width(), scheme.right_width(), scheme.boundary_width());
    let k = p + r;
    let coeffs = resolvent_coeffs(scheme, comp.z)?;
    let mut rows = CMat::zeros(n * r, n * k);
    let mut powers: Vec<CMat> = vec![CMat::identity(n * k, n * k)];
    for (i, row) in (1 - r as i64..=0).rev().enumerate() {
        let ro = i * n;
        let col = (p as i64 - row) as usize * n;
        for d in 0..n {
            rows[(ro + d, col + d)] += Complex64::new(1.0, 0.0);
        }
        for shift in 0..=q {
            let b = coeffs.boundary_at(shift, row);
            if b.iter().all(|x| x.norm() == 0.0) {
                continue;
            }
            let target = 1 + shift as i64;
            if target <= p as i64 {
                let c0 = (p as i64 - target) as usize * n;
                let mut v = rows.view_mut((ro, c0), (n, n));
                v -= b;
            } else {
                let e = (target - p as i64) as usize;
                while powers.len() <= e {
                    let next = powers.last().unwrap() * &comp.matrix;
                    powers.push(next);
                }
                let top = powers[e].rows(0, n).into_owned();
                let contrib = b * top;
                let mut v = rows.view_mut((ro, 0), (n, n * k));
                v -= &contrib;
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KlValue {
    pub z: Complex64,
    pub determinant: Complex64,
    pub abs: f64,
}

pub fn kl_from_rows(split: &SpectralSplit, rows: &CMat) -> KlValue {
    let det = linalg::determinant(&(rows * &split.stable_basis));
    KlValue { z: split.z, determinant: det, abs: det.norm() }
}

pub fn kl_determinant_with(scheme: &SchemeDef, z: Complex64, model: &dyn BoundaryModel) -> Result<KlValue> {
    let comp = assemble_companion(scheme, z)?;
    let split = spectral_split(&comp, scheme)?;
    let rows = model.rows(scheme, &comp)?;
    Ok(kl_from_rows(&split, &rows))
}

/// `det(B(z) V_s(z))` with an orthonormal stable basis; `|.|` is basis independent.
pub fn kl_determinant(scheme: &SchemeDef, z: Complex64) -> Result<KlValue> {
    kl_determinant_with(scheme, z, &SchemeBoundary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlSample {
    pub delta: f64,
    pub theta: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlScan {
    pub samples: Vec<KlSample>,
    pub min_abs: f64,
    pub argmin: (f64, f64),
    /// Minimum over `theta` for each radius offset, in input order.
    pub min_by_radius: Vec<(f64, f64)>,
    /// `d ln(min |Delta|) / d ln(delta)` between the two smallest offsets; near 1
    /// when `Delta` vanishes linearly at the circle.
    pub decay_exponent: f64,
    pub tolerance: f64,
    pub plausible: bool,
}

/// Largest accepted decay exponent of `min |Delta|` towards the circle.
pub const DECAY_LIMIT: f64 = 0.5;

fn decay_exponent(min_by_radius: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = min_by_radius.iter().copied().filter(|&(d, m)| d > 0.0 && m > 0.0).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    match pts.as_slice() {
        [(d0, m0), (d1, m1), ..] if d0 != d1 => (m1.ln() - m0.ln()) / (d1.ln() - d0.ln()),
        _ => 0.0,
    }
}

/// Scan `|Delta|` on `z = (1 + delta) e^{i theta}`.
pub fn uklc_scan(
    scheme: &SchemeDef,
    deltas: &[f64],
    n_theta: usize,
    tol: f64,
    model: &dyn BoundaryModel,
) -> Result<KlScan> {
    if deltas.is_empty() || n_theta == 0 || deltas.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidInput("need positive radius offsets and at least one angle".into()));
    }
    let points: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| (0..n_theta).map(move |k| (d, 2.0 * PI * k as f64 / n_theta as f64)))
        .collect();
    let samples: Vec<KlSample> = points
        .par_iter()
        .map(|&(delta, theta)| {
            let z = Complex64::from_polar(1.0 + delta, theta);
            kl_determinant_with(scheme, z, model).map(|v| KlSample { delta, theta, abs: v.abs })
        })
        .collect::<Result<_>>()?;
    let mut best = &samples[0];
    for s in &samples {
        if s.abs < best.abs {
            best = s;
        }
    }
    let min_by_radius: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let m = samples.iter().filter(|s| s.delta == d).map(|s| s.abs).fold(f64::INFINITY, f64::min);
            (d, m)
        })
        .collect();
    let decay_exponent = decay_exponent(&min_by_radius);
    Ok(KlScan {
        min_abs: best.abs,
        argmin: (best.delta, best.theta),
        min_by_radius,
        decay_exponent,
        tolerance: tol,
        plausible: best.abs >= tol && decay_exponent < DECAY_LIMIT,
        samples,
    })
}

/// Kind of a companion eigenvalue at a point of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// `|mu| > 1`.
    Expanding,
    /// `|mu| < 1`.
    Contracting,
    /// Simple unit eigenvalue with `z mu'(z) conj(mu)` real and nonzero.
    UnitScalar { radial_rate: f64 },
    /// Unit eigenvalue that is multiple or has degenerate radial derivative.
    Glancing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockClass {
    pub eigenvalue: Complex64,
    pub kind: BlockKind,
    /// Whether the eigenvalue lies inside the unit disc just outside `z_bar`.
    pub stable_side: bool,
}

const UNIT_CLASS_TOL: f64 = 1e-6;
const RADIAL_STEP: f64 = 1e-4;

fn nearest(ev: &[Complex64], z: Complex64) -> Complex64 {
    *ev.iter().min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm())).unwrap()
}

fn companion_eigenvalues(scheme: &SchemeDef, z: Complex64) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(&assemble_companion(scheme, z)?.matrix)
}

/// Classify each eigenvalue of the companion matrix at `|z_bar| = 1`.
pub fn classify_boundary_blocks(scheme: &SchemeDef, z_bar: Complex64) -> Result<Vec<BlockClass>> {
    if (z_bar.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("|z_bar| = {} is not 1", z_bar.norm())));
    }
    let ev = companion_eigenvalues(scheme, z_bar)?;
    let outside = companion_eigenvalues(scheme, z_bar * (1.0 + 1e-7))?;
    let (perm, _, _) = linalg::match_values(&ev, &outside);
    let mut out = Vec::with_capacity(ev.len());
    for (i, &mu) in ev.iter().enumerate() {
        let kind = if mu.norm() > 1.0 + UNIT_CLASS_TOL {
            BlockKind::Expanding
        } else if mu.norm() < 1.0 - UNIT_CLASS_TOL {
            BlockKind::Contracting
        } else {
            let multiple = ev.iter().enumerate().any(|(j, &o)| j != i && (o - mu).norm() < 1e-5);
            if multiple {
                BlockKind::Glancing
            } else {
                let at = |g: f64| -> Result<Complex64> {
                    Ok(nearest(&companion_eigenvalues(scheme, z_bar * g.exp())?, mu))
                };
                let h = RADIAL_STEP;
                let d1 = (at(h)? - at(-h)?) / (2.0 * h);
                let d2 = (at(2.0 * h)? - at(-2.0 * h)?) / (4.0 * h);
                let rate = (4.0 * d1 - d2) / 3.0 * mu.conj();
                if rate.norm() > UNIT_CLASS_TOL && rate.im.abs() <= 1e-6 * rate.norm().max(1.0) {
                    BlockKind::UnitScalar { radial_rate: rate.re }
                } else {
                    BlockKind::Glancing
                }
            }
        };
        let stable_side = outside[perm[i]].norm() < 1.0;
        out.push(BlockClass { eigenvalue: mu, kind, stable_side });
    }
    Ok(out)
}

/// A scalar curve `tau -> f(tau)` sampled along `tau = gamma + i theta`.
pub trait ScalarBranch: Sync {
    /// Values at `gamma + i theta` for the given increasing `thetas` (containing 0).
    fn curve(&self, gamma: f64, thetas: &[f64]) -> Result<Vec<Complex64>>;
}

/// Closed-form `f`.
pub struct AnalyticBranch<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> ScalarBranch for AnalyticBranch<F> {
    fn curve(&self, gamma: f64, thetas: &[f64]) -> Result<Vec<Complex64>> {
        Ok(thetas.iter().map(|&t| (self.0)(Complex64::new(gamma, t))).collect())
    }
}

/// `f(tau) = +-(log mu(z_bar e^tau) - log mu(z_bar))` for a companion eigenvalue
/// followed from `mu_bar`, oriented so that `Re f > 0` for `tau > 0`.
pub struct CompanionBranch<'a> {
    pub scheme: &'a SchemeDef,
    pub z_bar: Complex64,
    pub mu_bar: Complex64,
    /// Pick the continuation that leaves the unit disc (`true`) or enters it.
    pub unstable: bool,
}

impl CompanionBranch<'_> {
    fn start(&self, gamma: f64) -> Result<Complex64> {
        let ev = companion_eigenvalues(self.scheme, self.z_bar * gamma.exp())?;
        let radius = ev.iter().map(|m| (m - self.mu_bar).norm()).fold(f64::INFINITY, f64::min);
        let near: Vec<Complex64> =
            ev.into_iter().filter(|m| (m - self.mu_bar).norm() <= 4.0 * radius + 1e-12).collect();
        let pick = near
            .iter()
            .copied()
            .filter(|m| (m.norm() > 1.0) == self.unstable)
            .min_by(|a, b| (*a - self.mu_bar).norm().total_cmp(&(*b - self.mu_bar).norm()));
        pick.or_else(|| near.first().copied())
            .ok_or_else(|| Error::EigenFailure("no eigenvalue near the base point".into()))
    }
}

impl ScalarBranch for CompanionBranch<'_> {
    fn curve(&self, gamma: f64, thetas: &[f64]) -> Result<Vec<Complex64>> {
        let zero = thetas
            .iter()
            .position(|&t| t == 0.0)
            .ok_or_else(|| Error::InvalidInput("theta grid must contain 0".into()))?;
        let mut mus = vec![Complex64::new(0.0, 0.0); thetas.len()];
        mus[zero] = self.start(gamma)?;
        let eval = |t: f64| companion_eigenvalues(self.scheme, self.z_bar * Complex64::new(gamma, t).exp());
        for k in zero + 1..thetas.len() {
            mus[k] = nearest(&eval(thetas[k])?, mus[k - 1]);
        }
        for k in (0..zero).rev() {
            mus[k] = nearest(&eval(thetas[k])?, mus[k + 1]);
        }
        let base = self.mu_bar.ln();
        let mut out = Vec::with_capacity(mus.len());
        let mut prev_im = base.im;
        let unwrap_from = |mu: Complex64, prev: &mut f64| {
            let mut l = mu.ln();
            while l.im - *prev > PI {
                l.im -= 2.0 * PI;
            }
            while l.im - *prev < -PI {
                l.im += 2.0 * PI;
            }
            *prev = l.im;
            l - base
        };
        let center = unwrap_from(mus[zero], &mut prev_im);
        let sign = if self.unstable { 1.0 } else { -1.0 };
        let mut right = Vec::new();
        let mut p = center.im + base.im;
        for mu in &mus[zero + 1..] {
            right.push(unwrap_from(*mu, &mut p));
        }
        let mut left = Vec::new();
        let mut p = center.im + base.im;
        for mu in mus[..zero].iter().rev() {
            left.push(unwrap_from(*mu, &mut p));
        }
        out.extend(left.into_iter().rev());
        out.push(center);
        out.extend(right);
        Ok(out.into_iter().map(|v| v * sign).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TvAtGamma {
    pub gamma: f64,
    pub sup_tv: f64,
    pub argmax_w: f64,
    pub theta_samples: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TvReport {
    pub per_gamma: Vec<TvAtGamma>,
    pub sup_tv: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct TvConfig {
    pub gammas: Vec<f64>,
    pub w_points: usize,
    /// Half-width of the `theta` window.
    pub epsilon: f64,
    pub initial_samples: usize,
    pub max_samples: usize,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            w_points: 41,
            epsilon: 0.1,
            initial_samples: 257,
            max_samples: 1 << 19,
        }
    }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Total variation of `arg(f(gamma + i theta) - i w)` over `|theta| <= epsilon`,
/// refining `theta` until every argument increment is below `pi/4`.
pub fn arg_total_variation(branch: &dyn ScalarBranch, cfg: &TvConfig) -> Result<TvReport> {
    let mut per_gamma = Vec::with_capacity(cfg.gammas.len());
    for &gamma in &cfg.gammas {
        let mut n = cfg.initial_samples | 1;
        let (mut ws, mut tvs, mut flagged);
        loop {
            let thetas: Vec<f64> =
                (0..n).map(|k| cfg.epsilon * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect();
            let f = branch.curve(gamma, &thetas)?;
            let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.im), b.max(v.im)));
            let mid = 0.5 * (lo + hi);
            let half = 1.5 * (hi - lo).max(1e-300);
            ws = (0..cfg.w_points)
                .map(|k| {
                    if cfg.w_points == 1 {
                        mid
                    } else {
                        mid + half * (2.0 * k as f64 / (cfg.w_points - 1) as f64 - 1.0)
                    }
                })
                .collect::<Vec<f64>>();
            flagged = 0;
            let mut coarse = false;
            tvs = Vec::with_capacity(ws.len());
            for &w in &ws {
                let iw = Complex64::new(0.0, w);
                let mut tv = 0.0;
                let mut prev: Option<f64> = None;
                for v in &f {
                    let d = v - iw;
                    if d.norm() < 1e-14 {
                        flagged += 1;
                        prev = None;
                        continue;
                    }
                    let a = d.arg();
                    if let Some(p) = prev {
                        let inc = wrap(a - p).abs();
                        if inc >= PI / 4.0 {
                            coarse = true;
                        }
                        tv += inc;
                    }
                    prev = Some(a);
                }
                tvs.push(tv);
            }
            if !coarse || n >= cfg.max_samples {
                break;
            }
            n = 2 * n - 1;
        }
        let (k, &sup) = tvs
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        per_gamma.push(TvAtGamma { gamma, sup_tv: sup, argmax_w: ws[k], theta_samples: n, flagged });
    }
    let sup_tv = per_gamma.iter().map(|g| g.sup_tv).fold(0.0, f64::max);
    Ok(TvReport { per_gamma, sup_tv, bound: 6.0 * PI })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::c;
    use proptest::prelude::*;

    #[test]
    fn coefficients_for_upwind_and_leapfrog() {
        let rc = resolvent_coeffs(&fixtures::upwind(1.0, 0.5), c(2.0, 0.0)).unwrap();
        assert!((rc.interior_at(0)[(0, 0)] - c(0.75, 0.0)).norm() < 1e-15);
        assert!((rc.interior_at(-1)[(0, 0)] - c(-0.25, 0.0)).norm() < 1e-15);
        let rc = resolvent_coeffs(&fixtures::leapfrog(1.0, 0.5), c(2.0, 0.0)).unwrap();
        assert!((rc.interior_at(1)[(0, 0)] - c(0.25, 0.0)).norm() < 1e-15);
        assert!((rc.interior_at(-1)[(0, 0)] - c(-0.25, 0.0)).norm() < 1e-15);
        assert!((rc.interior_at(0)[(0, 0)] - c(0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn upwind_companion_is_scalar() {
        let m = assemble_companion(&fixtures::upwind(1.0, 0.5), c(2.0, 0.0)).unwrap();
        assert!((m.matrix[(0, 0)] - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lax_friedrichs_split_at_two() {
        let s = fixtures::lax_friedrichs(1.0, 0.5);
        let comp = assemble_companion(&s, c(2.0, 0.0)).unwrap();
        let split = spectral_split(&comp, &s).unwrap();
        let mut ev: Vec<f64> = split.eigenvalues.iter().map(|m| m.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - (4.0 - 13f64.sqrt())).abs() < 1e-12);
        assert!((ev[1] - (4.0 + 13f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn characteristic_scheme_is_rejected() {
        let mut s = SchemeDef::zeros(1, 1, 1, 0, 0, 1.0).unwrap();
        s.set_interior(-1, 0, nalgebra::DMatrix::from_element(1, 1, 0.5)).unwrap();
        s.set_interior(0, 0, nalgebra::DMatrix::from_element(1, 1, 0.5)).unwrap();
        assert!(matches!(
            assemble_companion(&s, c(2.0, 0.0)),
            Err(Error::SingularLeadingBlock { .. })
        ));
    }

    #[test]
    fn dirichlet_upwind_determinant_is_one() {
        let s = fixtures::upwind(1.0, 0.5);
        for z in [c(1.5, 0.3), c(-1.1, 0.0), c(0.0, 3.0)] {
            assert!((kl_determinant(&s, z).unwrap().abs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lax_wendroff_extrapolation_matches_stable_root() {
        let s = fixtures::lax_wendroff(1.0, 0.5).with_extrapolation();
        let la = 0.5f64;
        for z in [c(1.3, 0.4), c(-1.2, 0.5), c(0.2, -2.0)] {
            // Stable root of A_1 mu^2 + A_0 mu + A_{-1} = 0 with A_l = delta_l0 - a_l / z.
            let am = -(la + la * la) / 2.0 / z;
            let a0 = 1.0 - (1.0 - la * la) / z;
            let ap = -(la * la - la) / 2.0 / z;
            let disc = (a0 * a0 - 4.0 * ap * am).sqrt();
            let r1 = (-a0 + disc) / (2.0 * ap);
            let r2 = (-a0 - disc) / (2.0 * ap);
            let mu = if r1.norm() < 1.0 { r1 } else { r2 };
            let want = (1.0 - mu).norm() / (1.0 + mu.norm_sqr()).sqrt();
            let got = kl_determinant(&s, z).unwrap().abs;
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn zero_rows_give_zero_determinant() {
        let s = fixtures::upwind(1.0, 0.5);
        let zero = |sch: &SchemeDef, comp: &CompanionMatrix| -> Result<CMat> {
            Ok(CMat::zeros(sch.dim() * sch.left_width(), comp.matrix.nrows()))
        };
        let scan = uklc_scan(&s, &[1e-1, 1e-3], 16, 1e-6, &zero).unwrap();
        assert_eq!(scan.min_abs, 0.0);
        assert!(!scan.plausible);
    }

    #[test]
    fn inflow_extrapolation_fails_the_trend_check() {
        let s = fixtures::lax_wendroff(1.0, 0.5).with_extrapolation();
        let scan = uklc_scan(&s, &[1e-2, 1e-3, 1e-4], 64, 1e-6, &SchemeBoundary).unwrap();
        assert!(scan.min_abs > 1e-6);
        assert!((scan.decay_exponent - 1.0).abs() < 0.05, "{}", scan.decay_exponent);
        assert!(!scan.plausible);
        let scan = uklc_scan(&fixtures::upwind(1.0, 0.5), &[1e-2, 1e-3, 1e-4], 64, 1e-6, &SchemeBoundary).unwrap();
        assert!(scan.decay_exponent.abs() < 1e-9 && scan.plausible);
    }

    #[test]
    fn upwind_blocks() {
        let s = fixtures::upwind(1.0, 0.5);
        let b = classify_boundary_blocks(&s, c(1.0, 0.0)).unwrap();
        assert_eq!(b.len(), 1);
        match b[0].kind {
            BlockKind::UnitScalar { radial_rate } => assert!((radial_rate + 2.0).abs() < 1e-6),
            k => panic!("{k:?}"),
        }
        let b = classify_boundary_blocks(&s, c(-1.0, 0.0)).unwrap();
        assert_eq!(b[0].kind, BlockKind::Contracting);
        assert!((b[0].eigenvalue - c(-1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn leapfrog_glancing_block() {
        let s = fixtures::leapfrog(1.0, 0.5);
        let z_bar = c(0.75f64.sqrt(), -0.5);
        let b = classify_boundary_blocks(&s, z_bar).unwrap();
        assert!(b.iter().all(|x| x.kind == BlockKind::Glancing), "{b:?}");
        assert!(b.iter().any(|x| x.stable_side) && b.iter().any(|x| !x.stable_side));
    }

    #[test]
    fn transport_total_variation() {
        let cfg = TvConfig { gammas: vec![1e-4], w_points: 1, ..TvConfig::default() };
        let r = arg_total_variation(&AnalyticBranch(|t: Complex64| t), &cfg).unwrap();
        let want = 2.0 * (0.1f64 / 1e-4).atan();
        assert!((r.per_gamma[0].sup_tv - want).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn projectors_and_counts(rad in 1.001f64..3.0, th in 0.0f64..(2.0 * PI), which in 0usize..4) {
            let s = [
                fixtures::upwind(1.0, 0.5),
                fixtures::lax_friedrichs(1.0, 0.5),
                fixtures::lax_wendroff(1.0, 0.5),
                fixtures::leapfrog(1.0, 0.5),
            ][which].clone();
            let z = Complex64::from_polar(rad, th);
            let comp = assemble_companion(&s, z).unwrap();
            let split = spectral_split(&comp, &s).unwrap();
            let id = CMat::identity(comp.matrix.nrows(), comp.matrix.ncols());
            prop_assert!((&split.stable_projector + &split.unstable_projector - id).norm() < 1e-10);
            let ms = &comp.matrix * &split.stable_basis;
            let back = &split.stable_basis * (split.stable_basis.adjoint() * &ms);
            prop_assert!((ms - back).norm() < 1e-10);
        }

        #[test]
        fn determinant_modulus_is_basis_independent(rad in 1.01f64..3.0, th in 0.0f64..(2.0 * PI), phase in 0.0f64..(2.0 * PI)) {
            let s = fixtures::lax_wendroff(1.0, 0.5).with_extrapolation();
            let z = Complex64::from_polar(rad, th);
            let comp = assemble_companion(&s, z).unwrap();
            let mut split = spectral_split(&comp, &s).unwrap();
            let rows = boundary_matrix(&s, &comp).unwrap();
            let a = kl_from_rows(&split, &rows).abs;
            split.stable_basis *= Complex64::from_polar(1.0, phase);
            let b = kl_from_rows(&split, &rows).abs;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
