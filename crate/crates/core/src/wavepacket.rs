//! Band-limited wave packets, their geometric-optics approximation and the
//! trace experiment that separates glancing from non-glancing carriers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::linalg::CVec;
use crate::scheme::SchemeDef;
use crate::sim;
use crate::symbol;

pub const DEFAULT_QUADRATURE: usize = 4096;

/// Smooth envelope `a` whose Fourier transform is the bump
/// `a_hat(k) = exp(-1 / (1 - (2k / delta0)^2))` on `|k| < delta0 / 2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub delta0: f64,
    /// First node and spacing of the equispaced quadrature.
    k0: f64,
    h: f64,
    weights: Vec<f64>,
    /// `a(0)`.
    pub peak: f64,
    /// `|x|` below which trapezoid aliasing is below `1e-10`.
    pub certified_range: f64,
}

impl Envelope {
    pub fn hat(&self, k: f64) -> f64 {
        let t = 2.0 * k / self.delta0;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    }

    /// `a(x) = (1 / 2 pi) int a_hat(k) e^{i k x} dk`.
    pub fn value(&self, x: f64) -> f64 {
        let step = Complex64::from_polar(1.0, self.h * x);
        let mut e = Complex64::from_polar(1.0, self.k0 * x);
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            if i % 256 == 0 {
                e = Complex64::from_polar(1.0, (self.k0 + i as f64 * self.h) * x);
            }
            acc += w * e.re;
            e *= step;
        }
        acc
    }

    /// Smallest `R` with `|a(x)| <= tol |a(0)|` on a `0.25 / delta0`-spaced scan of
    /// `R <= |x| <= max(2R, 100 / delta0)`.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let h = 0.25 / self.delta0;
        let mut last: f64 = 0.0;
        let mut x = 0.0;
        while x <= self.certified_range && x <= (2.0 * last).max(100.0 / self.delta0) {
            if self.value(x).abs() > tol * self.peak.abs() {
                last = x;
            }
            x += h;
        }
        last + h
    }

    /// `sum_j dx |a(j dx)|^2` over all `j` with `|j dx| <= radius`.
    pub fn riemann_mass(&self, dx: f64, radius: f64) -> f64 {
        let m = (radius / dx).ceil() as i64;
        (-m..=m).map(|j| self.value(j as f64 * dx).powi(2) * dx).sum()
    }
}

pub fn make_envelope(delta0: f64, quadrature: usize) -> Result<Envelope> {
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::InvalidInput("delta0 must be positive".into()));
    }
    if quadrature < 16 {
        return Err(Error::InvalidInput("too few quadrature nodes".into()));
    }
    let half = delta0 / 2.0;
    let h = delta0 / quadrature as f64;
    let mut env = Envelope { delta0, k0: -half + h, h, weights: Vec::new(), peak: 0.0, certified_range: 0.0 };
    // Interior nodes only: the bump and all its derivatives vanish at the ends.
    env.weights = (1..quadrature).map(|i| env.hat(-half + i as f64 * h) * h / (2.0 * PI)).collect();
    env.peak = env.value(0.0);
    env.certified_range = PI / h;
    Ok(env)
}

/// Carrier, branch and polarization of a single-branch packet.
#[derive(Debug, Clone)]
pub struct PacketSpec {
    pub xi_bar: f64,
    pub branch: usize,
    pub envelope: Envelope,
    /// Unit vector in `C^{N(s+1)}` with `Pi_p amplitude = amplitude`.
    pub amplitude: CVec,
    /// `e^{i omega_p(xi_bar)}`.
    pub z: Complex64,
    pub group_velocity: f64,
    /// Envelope centre in `x`.
    pub center: f64,
}

/// Packet polarized along the eigenvector of branch `branch` at `xi_bar`.
pub fn make_packet(scheme: &SchemeDef, xi_bar: f64, branch: usize, envelope: Envelope) -> Result<PacketSpec> {
    let z = symbol::branch_value(scheme, xi_bar, branch)?;
    if (z.norm() - 1.0).abs() > symbol::UNIT_TOL {
        return Err(Error::NotUnitModulus { xi: xi_bar, modulus: z.norm() });
    }
    let v = symbol::group_velocity(scheme, xi_bar, branch)?;
    let ep = symbol::eigen_projector(scheme, Complex64::from_polar(1.0, xi_bar), z);
    let mut amp = ep.right.clone();
    let pivot = amp.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    amp *= pivot.conj() / pivot.norm();
    amp /= Complex64::new(amp.norm(), 0.0);
    Ok(PacketSpec { xi_bar, branch, envelope, amplitude: amp, z: z / z.norm(), group_velocity: v, center: 0.0 })
}

impl PacketSpec {
    /// `Pi_p(xi_bar)` applied to the amplitude minus the amplitude.
    pub fn polarization_defect(&self, scheme: &SchemeDef) -> f64 {
        let ep = symbol::eigen_projector(scheme, Complex64::from_polar(1.0, self.xi_bar), self.z);
        (&ep.projector * &self.amplitude - &self.amplitude).norm()
    }

    fn envelope_at(&self, x: f64) -> f64 {
        self.envelope.value(x - self.center)
    }

    /// Index window covering the truncated envelope at time `t`.
    pub fn window(&self, dx: f64, t: f64, radius: f64) -> (i64, i64) {
        let c = self.center + t * self.group_velocity;
        (((c - radius) / dx).floor() as i64, ((c + radius) / dx).ceil() as i64)
    }
}

/// Initial layers `f^0..f^s` of `W_j^0 = e^{i j xi_bar} amplitude a(j dx)`, where
/// `W = (V^s, ..., V^0)`; the envelope is truncated at `radius`.
pub fn packet_initial_data(scheme: &SchemeDef, spec: &PacketSpec, dx: f64, radius: f64) -> Result<Vec<GridSequence>> {
    let n = scheme.dim();
    let s = scheme.extra_levels();
    if spec.amplitude.len() != n * (s + 1) {
        return Err(Error::InvalidInput("amplitude size differs from N(s+1)".into()));
    }
    let (lo, hi) = spec.window(dx, 0.0, radius);
    let len = (hi - lo + 1) as usize;
    let values: Vec<Complex64> =
        (lo..=hi).map(|j| Complex64::from_polar(spec.envelope_at(j as f64 * dx), spec.xi_bar * j as f64)).collect();
    Ok((0..=s)
        .map(|level| {
            let block = s - level;
            GridSequence::from_fn(n, lo, len, |j, out| {
                let e = values[(j - lo) as usize];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = e * spec.amplitude[block * n + c];
                }
            })
            .with_implicit_zero(true)
        })
        .collect())
}

/// `W_j^n ~ z^n e^{i j xi_bar} amplitude a(j dx - n dt v)` on `[lo, hi]`.
pub fn approx_solution(scheme: &SchemeDef, spec: &PacketSpec, n: usize, dx: f64, (lo, hi): (i64, i64)) -> GridSequence {
    let dim = spec.amplitude.len();
    let shift = n as f64 * dx * scheme.mesh_ratio() * spec.group_velocity;
    let phase = spec.z.powu(n as u32);
    GridSequence::from_fn(dim, lo, (hi - lo + 1).max(0) as usize, |j, out| {
        let e = phase * Complex64::from_polar(spec.envelope_at(j as f64 * dx - shift), spec.xi_bar * j as f64);
        for (o, a) in out.iter_mut().zip(spec.amplitude.iter()) {
            *o = e * a;
        }
    })
}

/// Augmented exact solution `W^n = (V^{n+s}, ..., V^n)` on `[lo, hi]` for each requested `n`.
fn exact_augmented(
    scheme: &SchemeDef,
    f: &[GridSequence],
    levels: &[usize],
    window: (i64, i64),
) -> Result<Vec<GridSequence>> {
    let s = scheme.extra_levels();
    let dim = scheme.dim();
    let top = levels.iter().copied().max().unwrap_or(0) + s;
    let mut keep: Vec<Option<GridSequence>> = vec![None; top + 1];
    let wanted: Vec<bool> = (0..=top).map(|m| levels.iter().any(|&n| m >= n && m <= n + s)).collect();
    sim::run_cauchy_with(scheme, f, top, window, |m, v| {
        if wanted[m] {
            keep[m] = Some(v.restrict(window.0, window.1)?);
        }
        Ok(())
    })?;
    Ok(levels
        .iter()
        .map(|&n| {
            GridSequence::from_fn(dim * (s + 1), window.0, (window.1 - window.0 + 1) as usize, |j, out| {
                for b in 0..=s {
                    let v = keep[n + s - b].as_ref().unwrap().get(j).unwrap();
                    out[b * dim..(b + 1) * dim].copy_from_slice(v);
                }
            })
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketErrorRow {
    pub dx: f64,
    pub n: usize,
    pub t: f64,
    /// `sup_j |W_j^n - W~_j^n|`.
    pub error: f64,
    /// `error / sqrt(dx (1 + t^2))`.
    pub fitted_c: f64,
}

/// Truncation level of the envelope, relative to `a(0)`.
pub const ENVELOPE_TOL: f64 = 1e-13;

/// Sup-norm distance between the exact Cauchy solution and the geometric-optics ansatz.
pub fn packet_error(scheme: &SchemeDef, spec: &PacketSpec, n_list: &[usize], dx: f64) -> Result<Vec<PacketErrorRow>> {
    let radius = spec.envelope.support_radius(ENVELOPE_TOL);
    let f = packet_initial_data(scheme, spec, dx, radius)?;
    let dt = dx * scheme.mesh_ratio();
    let t_max = n_list.iter().copied().max().unwrap_or(0) as f64 * dt;
    let (a0, b0) = spec.window(dx, 0.0, radius);
    let (a1, b1) = spec.window(dx, t_max, radius);
    let window = (a0.min(a1), b0.max(b1));
    let exact = exact_augmented(scheme, &f, n_list, window)?;
    Ok(n_list
        .iter()
        .zip(exact)
        .map(|(&n, w)| {
            let approx = approx_solution(scheme, spec, n, dx, window);
            let error = w
                .data()
                .iter()
                .zip(approx.data())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let t = n as f64 * dt;
            PacketErrorRow { dx, n, t, error, fitted_c: error / (dx * (1.0 + t * t)).sqrt() }
        })
        .collect())
}

/// Error at a fixed time `t` under successive mesh refinements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub t: f64,
    pub rows: Vec<PacketErrorRow>,
    /// `error(dx) / error(dx / 2)` for consecutive entries.
    pub halving_ratios: Vec<f64>,
    /// Ratio of consecutive fitted constants.
    pub c_ratios: Vec<f64>,
}

pub fn packet_error_refinement(scheme: &SchemeDef, spec: &PacketSpec, t: f64, dxs: &[f64]) -> Result<RefinementStudy> {
    let rows: Vec<PacketErrorRow> = dxs
        .par_iter()
        .map(|&dx| {
            let n = (t / (dx * scheme.mesh_ratio())).round() as usize;
            packet_error(scheme, spec, &[n], dx).map(|mut r| r.remove(0))
        })
        .collect::<Result<_>>()?;
    let halving_ratios = rows.windows(2).map(|w| w[0].error / w[1].error).collect();
    let c_ratios = rows.windows(2).map(|w| w[1].fitted_c / w[0].fitted_c).collect();
    Ok(RefinementStudy { t, rows, halving_ratios, c_ratios })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceCell {
    pub t: f64,
    pub dt: f64,
    /// `sum_{n <= t / dt} dt |W_0^n|^2`.
    pub trace: f64,
    /// `sum_j dx |W_j^0|^2`.
    pub data_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFit {
    pub dt: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceGrowthReport {
    pub cells: Vec<TraceCell>,
    pub fits: Vec<LinearFit>,
    /// `|amplitude a(0)|^2`, the growth rate of a stationary packet.
    pub expected_slope: f64,
    /// `max trace / data_norm` over all cells.
    pub max_ratio: f64,
    /// For each `dt`, `ratio(T_max) / ratio(T_max / 2)` when both horizons are present.
    pub doubling_ratios: Vec<f64>,
    /// `|zeta'|` at the carrier.
    pub derivative_abs: f64,
}

impl TraceGrowthReport {
    /// Every fit has `R^2 >= min_r2` and a slope within `rel` of the expected one.
    pub fn linear_growth(&self, min_r2: f64, rel: f64) -> bool {
        !self.fits.is_empty()
            && self.fits.iter().all(|f| f.r2 >= min_r2 && (f.slope - self.expected_slope).abs() <= rel * self.expected_slope)
    }
}

fn linear_fit(dt: f64, xs: &[f64], ys: &[f64]) -> LinearFit {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 && sxx > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    LinearFit { dt, slope, intercept, r2 }
}

/// Trace sums at `j = 0` for the packet as a solution of the Cauchy problem.
pub fn glancing_trace_experiment(
    scheme: &SchemeDef,
    spec: &PacketSpec,
    t_list: &[f64],
    dt_list: &[f64],
) -> Result<TraceGrowthReport> {
    if t_list.is_empty() || dt_list.is_empty() {
        return Err(Error::InvalidInput("empty horizon or step list".into()));
    }
    let s = scheme.extra_levels();
    let radius = spec.envelope.support_radius(ENVELOPE_TOL);
    let t_max = t_list.iter().copied().fold(0.0, f64::max);
    let per_dt: Vec<Vec<TraceCell>> = dt_list
        .par_iter()
        .map(|&dt| {
            let dx = dt / scheme.mesh_ratio();
            let f = packet_initial_data(scheme, spec, dx, radius)?;
            let data_norm: f64 = f.iter().map(|l| dx * l.norm_sqr()).sum();
            let n_top = (t_max / dt).floor() as usize + s;
            let mut at_zero = Vec::with_capacity(n_top + 1);
            sim::run_cauchy_with(scheme, &f, n_top, (0, 0), |_, v| {
                at_zero.push(v.norm_sqr_between(0, 0));
                Ok(())
            })?;
            Ok(t_list
                .iter()
                .map(|&t| {
                    let n_t = (t / dt + 1e-9).floor() as usize;
                    let trace: f64 = (0..=n_t).map(|n| dt * (0..=s).map(|b| at_zero[n + b]).sum::<f64>()).sum();
                    TraceCell { t, dt, trace, data_norm }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let fits = per_dt
        .iter()
        .zip(dt_list)
        .map(|(cells, &dt)| {
            let xs: Vec<f64> = cells.iter().map(|c| c.t).collect();
            let ys: Vec<f64> = cells.iter().map(|c| c.trace).collect();
            linear_fit(dt, &xs, &ys)
        })
        .collect();
    let doubling_ratios = per_dt
        .iter()
        .filter_map(|cells| {
            let last = cells.iter().max_by(|a, b| a.t.total_cmp(&b.t))?;
            let half = cells.iter().find(|c| (c.t - last.t / 2.0).abs() < 1e-12)?;
            Some((last.trace / last.data_norm) / (half.trace / half.data_norm))
        })
        .collect();
    let cells: Vec<TraceCell> = per_dt.into_iter().flatten().collect();
    let max_ratio = cells.iter().map(|c| c.trace / c.data_norm).fold(0.0, f64::max);
    let a0 = spec.envelope_at(0.0);
    let derivative_abs = symbol::local_derivative(scheme, spec.xi_bar, spec.z)?.value.norm();
    Ok(TraceGrowthReport {
        cells,
        fits,
        expected_slope: (spec.amplitude.norm() * a0).powi(2),
        max_ratio,
        doubling_ratios,
        derivative_abs,
    })
}

/// Fraction of `sum_j |W_j|^2` carried by frequencies with `|theta - xi_bar| <= half_width` (mod `2 pi`).
pub fn spectral_mass_fraction(data: &GridSequence, xi_bar: f64, half_width: f64, samples: usize) -> f64 {
    let total = data.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    let h = 2.0 * half_width / samples as f64;
    let mut inside = 0.0;
    for k in 0..samples {
        let theta = xi_bar - half_width + (k as f64 + 0.5) * h;
        let mut acc = vec![Complex64::new(0.0, 0.0); data.dim()];
        for j in data.first()..=data.last() {
            let e = Complex64::from_polar(1.0, -theta * j as f64);
            for (a, v) in acc.iter_mut().zip(data.get(j).unwrap()) {
                *a += e * v;
            }
        }
        inside += acc.iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
    }
    inside / (2.0 * PI) / total
}

/// `dx sum_j e^{i j xi_bar} a(j dx) e^{-i j dx xi}` and `sum_m a_hat(xi - (xi_bar + 2 pi m) / dx)`.
pub fn poisson_pair(env: &Envelope, xi_bar: f64, dx: f64, xi: f64, radius: f64) -> (Complex64, f64) {
    let m = (radius / dx).ceil() as i64;
    let lhs: Complex64 = (-m..=m)
        .map(|j| Complex64::from_polar(env.value(j as f64 * dx) * dx, j as f64 * (xi_bar - dx * xi)))
        .sum();
    let center = ((dx * xi - xi_bar) / (2.0 * PI)).round() as i64;
    let rhs = (center - 2..=center + 2).map(|k| env.hat(xi - (xi_bar + 2.0 * PI * k as f64) / dx)).sum();
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn envelope_is_real_even_and_scales() {
        let e = make_envelope(2.0, 2048).unwrap();
        assert!(e.peak > 0.0);
        for x in [0.3, 1.7, 5.0] {
            assert!((e.value(x) - e.value(-x)).abs() < 1e-15);
        }
        let wide = make_envelope(4.0, 2048).unwrap();
        for x in [0.5, 1.3, 3.0] {
            assert!((wide.value(x / 2.0) / wide.peak - e.value(x) / e.peak).abs() < 1e-10);
        }
        assert!(make_envelope(0.0, 2048).is_err());
    }

    #[test]
    fn riemann_sums_converge_to_l2_norm() {
        let e = make_envelope(4.0, 4096).unwrap();
        let r = e.support_radius(1e-12);
        // Plancherel: ||a||^2 = (1/2 pi) int a_hat^2.
        let h = 1e-4;
        let exact: f64 = (1..40000).map(|i| e.hat(-2.0 + i as f64 * h).powi(2) * h).sum::<f64>() / (2.0 * PI);
        assert!((e.riemann_mass(0.05, r) / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn poisson_formula_holds() {
        let e = make_envelope(2.0, 4096).unwrap();
        let r = e.support_radius(1e-14);
        let (dx, xi_bar) = (0.1, 1.0);
        for xi in [xi_bar / dx - 0.7, xi_bar / dx, xi_bar / dx + 0.4, xi_bar / dx + 2.0 * PI / dx + 0.2] {
            let (lhs, rhs) = poisson_pair(&e, xi_bar, dx, xi, r);
            assert!((lhs - rhs).norm() <= 1e-8 * e.hat(0.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn leapfrog_zero_frequency_polarization() {
        let s = fixtures::leapfrog(1.0, 0.5);
        let branches = symbol::track_branches(&s, 512).unwrap();
        let b = branches.iter().position(|b| (b.values[0] - 1.0).norm() < 1e-9).unwrap();
        let p = make_packet(&s, 0.0, b, make_envelope(2.0, 1024).unwrap()).unwrap();
        assert!((p.amplitude[0] - p.amplitude[1]).norm() < 1e-9);
        assert!(p.polarization_defect(&s) < 1e-9);
    }

    #[test]
    fn packet_data_and_ansatz_agree_at_time_zero() {
        let s = fixtures::upwind(1.0, 0.5);
        let p = make_packet(&s, 0.0, 0, make_envelope(2.0, 1024).unwrap()).unwrap();
        let r = p.envelope.support_radius(1e-10);
        let f = packet_initial_data(&s, &p, 0.1, r).unwrap();
        let w = approx_solution(&s, &p, 0, 0.1, (f[0].first(), f[0].last()));
        assert_eq!(w.data(), f[0].data());
        let err = packet_error(&s, &p, &[0], 0.1).unwrap();
        assert_eq!(err[0].error, 0.0);
    }

    #[test]
    fn upwind_envelope_moves_with_the_flow() {
        let s = fixtures::upwind(1.0, 0.5);
        let p = make_packet(&s, 0.0, 0, make_envelope(2.0, 1024).unwrap()).unwrap();
        assert!((p.group_velocity - 0.5).abs() < 1e-8);
        let w = approx_solution(&s, &p, 40, 0.1, (-50, 100));
        let peak = (-50..=100).max_by(|&a, &b| w.get(a).unwrap()[0].norm().total_cmp(&w.get(b).unwrap()[0].norm())).unwrap();
        assert_eq!(peak, 20);
    }

    #[test]
    fn stationary_packet_keeps_its_value_at_zero() {
        let s = fixtures::leapfrog(1.0, 0.5);
        let p = make_packet(&s, PI / 2.0, 0, make_envelope(2.0, 1024).unwrap()).unwrap();
        assert!(p.group_velocity.abs() < 1e-8);
        for n in [0, 7, 50] {
            let w = approx_solution(&s, &p, n, 0.05, (0, 0));
            let v: f64 = w.get(0).unwrap().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((v - p.envelope.peak).abs() < 1e-12);
        }
        assert!(make_packet(&s, PI / 2.0, 0, make_envelope(2.0, 1024).unwrap()).unwrap().amplitude.iter().all(|a| a.norm() > 0.1));
    }

    #[test]
    fn upwind_packet_is_spectrally_concentrated() {
        let s = fixtures::upwind(1.0, 0.5);
        let env = make_envelope(0.2, 2048).unwrap();
        let spec = PacketSpec {
            xi_bar: PI / 2.0,
            branch: 0,
            envelope: env,
            amplitude: CVec::from_element(1, Complex64::new(1.0, 0.0)),
            z: Complex64::new(1.0, 0.0),
            group_velocity: 0.0,
            center: 0.0,
        };
        let dx = 1.0;
        let r = spec.envelope.support_radius(1e-12);
        let f = packet_initial_data(&s, &spec, dx, r).unwrap();
        let frac = spectral_mass_fraction(&f[0], PI / 2.0, 0.1 * dx, 400);
        assert!(frac >= 0.99, "{frac}");
        let zero = GridSequence::zeros(1, 0, 5);
        assert_eq!(spectral_mass_fraction(&zero, 0.0, 0.1, 10), 0.0);
    }
}
