//! Time-domain solvers for the half-line problem and the Cauchy problem, the
//! splitting `U = V + W`, weighted norms and empirical stability estimates.
//!
//! Both solvers use shrinking windows: a layer stored on `[lo, hi]` determines
//! the next layer exactly on `[lo + r, hi - p]` (Cauchy) or `[1 - r, hi - p]`
//! (half line), so values inside the reported window never see truncation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::resolvent::{self, SchemeBoundary};
use crate::sbp;
use crate::scheme::SchemeDef;
use crate::symbol;

/// Cell budget for a single run (window length times levels).
pub const MAX_CELLS: usize = 1 << 30;

#[derive(Debug, Clone)]
struct Stencil {
    dim: usize,
    taps: Vec<(usize, i64, DMatrix<f64>)>,
}

impl Stencil {
    fn new(scheme: &SchemeDef) -> Self {
        let mut taps = Vec::new();
        for lag in 0..=scheme.extra_levels() {
            for shift in scheme.shifts() {
                let a = scheme.interior(shift, lag);
                if a.iter().any(|&x| x != 0.0) {
                    taps.push((lag, shift, a.clone()));
                }
            }
        }
        Self { dim: scheme.dim(), taps }
    }

    /// `sum_{lag, shift} A[shift, lag] u^{n - lag}_{j + shift}` for `j` in `[lo, hi]`.
    fn apply(&self, layers: &[GridSequence], lo: i64, hi: i64) -> GridSequence {
        let n = self.dim;
        let mut out = GridSequence::zeros(n, lo, (hi - lo + 1).max(0) as usize);
        let dst = out.data_mut();
        for (lag, shift, a) in &self.taps {
            let u = &layers[*lag];
            let src = u.data();
            for j in lo..=hi {
                let s = ((j + shift - u.first()) as usize) * n;
                let d = ((j - lo) as usize) * n;
                for r in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        acc += a[(r, c)] * src[s + c];
                    }
                    dst[d + r] += acc;
                }
            }
        }
        out
    }
}

/// Per-point source term: `f(level, j, out)` writes the value at `(level, j)`.
pub type SourceFn<'a> = &'a (dyn Fn(usize, i64, &mut [Complex64]) + Sync);

/// Boundary data `g_j^n` (called with the new level) and interior source `F_j^n`.
#[derive(Clone, Copy, Default)]
pub struct Forcing<'a> {
    pub boundary: Option<SourceFn<'a>>,
    pub interior: Option<SourceFn<'a>>,
}

/// Half-line solution at one time level together with the `s` previous levels.
#[derive(Debug, Clone)]
pub struct HalfLineState {
    scheme: SchemeDef,
    stencil: Stencil,
    dt: f64,
    level: usize,
    /// `layers[k] = U^{level - k}` on `[1 - r, right edge]`.
    layers: Vec<GridSequence>,
}

impl HalfLineState {
    /// `f_layers[n] = f^n` for `n = 0..=s`, read with implicit zeros on `[1 - r, right_edge]`.
    pub fn new(scheme: &SchemeDef, f_layers: &[GridSequence], right_edge: i64, dx: f64) -> Result<Self> {
        let s = scheme.extra_levels();
        if f_layers.len() != s + 1 {
            return Err(Error::InvalidInput(format!("expected {} initial layers", s + 1)));
        }
        if dx <= 0.0 {
            return Err(Error::InvalidInput("dx must be positive".into()));
        }
        let lo = 1 - scheme.left_width() as i64;
        if right_edge < lo {
            return Err(Error::WindowExhausted { steps: 0 });
        }
        let mut layers = Vec::with_capacity(s + 1);
        for f in f_layers.iter().rev() {
            if f.dim() != scheme.dim() {
                return Err(Error::InvalidInput("layer dimension differs from the scheme".into()));
            }
            let f = f.clone().with_implicit_zero(true);
            layers.push(f.resample(lo, right_edge)?.with_implicit_zero(false));
        }
        Ok(Self { scheme: scheme.clone(), stencil: Stencil::new(scheme), dt: dx * scheme.mesh_ratio(), level: s, layers })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn current(&self) -> &GridSequence {
        &self.layers[0]
    }

    pub fn previous(&self, lag: usize) -> &GridSequence {
        &self.layers[lag]
    }

    pub fn right_edge(&self) -> i64 {
        self.layers[0].last()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step of the half-line recursion.
    pub fn step(&mut self, forcing: Forcing<'_>) -> Result<()> {
        let sc = &self.scheme;
        let n = sc.dim();
        let r = sc.left_width() as i64;
        let p = sc.right_width() as i64;
        let q = sc.boundary_width() as i64;
        let hi = self.right_edge() - p;
        if hi < 1 + q {
            return Err(Error::WindowExhausted { steps: self.level });
        }
        let interior = self.stencil.apply(&self.layers, 1, hi);
        let mut next = GridSequence::zeros(n, 1 - r, (hi + r) as usize);
        for j in 1..=hi {
            next.get_mut(j)?.copy_from_slice(interior.get(j)?);
        }
        if let Some(f) = forcing.interior {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for j in 1..=hi {
                f(self.level, j, &mut buf);
                for (d, v) in next.get_mut(j)?.iter_mut().zip(&buf) {
                    *d += self.dt * v;
                }
            }
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for j in sc.boundary_rows() {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for lag in -1..=sc.extra_levels() as i64 {
                let layer = if lag < 0 { &next } else { &self.layers[lag as usize] };
                for ell in 0..=sc.boundary_width() {
                    let b = sc.boundary(ell, j, lag);
                    if b.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let u = layer.get(1 + ell as i64)?;
                    for row in 0..n {
                        for c in 0..n {
                            acc[row] += b[(row, c)] * u[c];
                        }
                    }
                }
            }
            if let Some(g) = forcing.boundary {
                g(self.level + 1, j, &mut buf);
                for (a, v) in acc.iter_mut().zip(&buf) {
                    *a += v;
                }
            }
            next.get_mut(j)?.copy_from_slice(&acc);
        }
        self.layers.pop();
        self.layers.insert(0, next);
        self.level += 1;
        Ok(())
    }
}

/// Functional form of [`HalfLineState::step`].
pub fn step_ibvp(state: &HalfLineState, forcing: Forcing<'_>) -> Result<HalfLineState> {
    let mut next = state.clone();
    next.step(forcing)?;
    Ok(next)
}

/// Largest index carrying data in any layer.
pub fn support_end(f_layers: &[GridSequence]) -> i64 {
    f_layers
        .iter()
        .map(|f| {
            let mut last = f.first() - 1;
            for j in f.first()..=f.last() {
                if f.get(j).unwrap().iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                    last = j;
                }
            }
            last
        })
        .max()
        .unwrap_or(0)
}

/// Right edge of the initial window that keeps `[1 - r, j_obs]` exact up to `n_max`.
pub fn initial_right_edge(scheme: &SchemeDef, j_obs: i64, n_max: usize) -> i64 {
    j_obs + (n_max as i64) * scheme.right_width() as i64
}

/// Observation edge covering the full support of the solution up to `n_max`.
pub fn full_support_edge(scheme: &SchemeDef, f_layers: &[GridSequence], n_max: usize) -> i64 {
    support_end(f_layers).max(1) + (n_max as i64) * scheme.left_width() as i64
}

fn check_budget(len: i64, levels: usize) -> Result<()> {
    let cells = (len.max(0) as usize).saturating_mul(levels.max(1));
    if cells > MAX_CELLS {
        return Err(Error::InvalidInput(format!("run needs {cells} cells, budget is {MAX_CELLS}")));
    }
    Ok(())
}

/// Drive the half-line solver from level `s` to `n_max`, calling `observe(n, U^n)`
/// for every level (initial ones included) on the exact window, which always
/// contains `[1 - r, j_obs]`.
pub fn run_ibvp_with(
    scheme: &SchemeDef,
    f_layers: &[GridSequence],
    n_max: usize,
    j_obs: i64,
    dx: f64,
    forcing: Forcing<'_>,
    mut observe: impl FnMut(usize, &GridSequence) -> Result<()>,
) -> Result<()> {
    let edge = initial_right_edge(scheme, j_obs, n_max);
    check_budget(edge + scheme.left_width() as i64, 1)?;
    let mut state = HalfLineState::new(scheme, f_layers, edge, dx)?;
    for n in 0..=scheme.extra_levels().min(n_max) {
        observe(n, state.previous(scheme.extra_levels() - n))?;
    }
    while state.level() < n_max {
        state.step(forcing)?;
        observe(state.level(), state.current())?;
    }
    Ok(())
}

/// Every level `U^0..U^{n_max}` restricted to `[1 - r, j_obs]`.
#[derive(Debug, Clone)]
pub struct HalfLineRun {
    pub dx: f64,
    pub dt: f64,
    pub levels: Vec<GridSequence>,
}

pub fn run_ibvp(
    scheme: &SchemeDef,
    f_layers: &[GridSequence],
    n_max: usize,
    j_obs: i64,
    dx: f64,
    forcing: Forcing<'_>,
) -> Result<HalfLineRun> {
    let lo = 1 - scheme.left_width() as i64;
    check_budget(j_obs - lo + 1, n_max + 1)?;
    let mut levels = Vec::with_capacity(n_max + 1);
    run_ibvp_with(scheme, f_layers, n_max, j_obs, dx, forcing, |_, u| {
        levels.push(u.restrict(lo, j_obs)?);
        Ok(())
    })?;
    Ok(HalfLineRun { dx, dt: dx * scheme.mesh_ratio(), levels })
}

/// Whole-line solution on a fixed window.
#[derive(Debug, Clone)]
pub struct CauchyRun {
    pub window: (i64, i64),
    pub levels: Vec<GridSequence>,
}

/// Exact Cauchy solution on `[lo, hi]` for `n = 0..=n_max`; layers are read with
/// implicit zeros on the enlarged window `[lo - n_max r, hi + n_max p]`.
pub fn run_cauchy(scheme: &SchemeDef, f_layers: &[GridSequence], n_max: usize, window: (i64, i64)) -> Result<CauchyRun> {
    let mut levels = Vec::with_capacity(n_max + 1);
    run_cauchy_with(scheme, f_layers, n_max, window, |_, v| {
        levels.push(v.restrict(window.0, window.1)?);
        Ok(())
    })?;
    Ok(CauchyRun { window, levels })
}

/// Streaming form of [`run_cauchy`]: `observe(n, V^n)` on a window containing `[lo, hi]`.
pub fn run_cauchy_with(
    scheme: &SchemeDef,
    f_layers: &[GridSequence],
    n_max: usize,
    (lo, hi): (i64, i64),
    mut observe: impl FnMut(usize, &GridSequence) -> Result<()>,
) -> Result<()> {
    let s = scheme.extra_levels();
    if f_layers.len() != s + 1 {
        return Err(Error::InvalidInput(format!("expected {} initial layers", s + 1)));
    }
    if hi < lo {
        return Err(Error::InvalidInput("empty observation window".into()));
    }
    let r = scheme.left_width() as i64;
    let p = scheme.right_width() as i64;
    let (a, b) = (lo - n_max as i64 * r, hi + n_max as i64 * p);
    check_budget(b - a + 1, s + 2)?;
    let stencil = Stencil::new(scheme);
    let mut layers: Vec<GridSequence> = Vec::with_capacity(s + 1);
    for f in f_layers.iter().rev() {
        layers.push(f.clone().with_implicit_zero(true).resample(a, b)?.with_implicit_zero(false));
    }
    for n in 0..=s.min(n_max) {
        observe(n, &layers[s - n])?;
    }
    let mut level = s;
    while level < n_max {
        let cur = &layers[0];
        let next = stencil.apply(&layers, cur.first() + r, cur.last() - p);
        layers.pop();
        layers.insert(0, next);
        level += 1;
        observe(level, &layers[0])?;
    }
    Ok(())
}

/// `U = V + W` with `V` the Cauchy solution of the zero-extended data and `W`
/// the half-line solution driven by the reconstructed boundary source `g`.
#[derive(Debug, Clone)]
pub struct SplitSolution {
    pub u: Vec<GridSequence>,
    pub v: Vec<GridSequence>,
    pub w: Vec<GridSequence>,
    /// `g[n]` on the boundary rows; zero for `n <= s`.
    pub g: Vec<GridSequence>,
    /// `max |U - (V + W)|` over the observation window.
    pub mismatch: f64,
}

pub fn split_solution(scheme: &SchemeDef, f_layers: &[GridSequence], n_max: usize, dx: f64) -> Result<SplitSolution> {
    let n = scheme.dim();
    let r = scheme.left_width() as i64;
    let s = scheme.extra_levels();
    let lo = 1 - r;
    let j_obs = full_support_edge(scheme, f_layers, n_max);
    let zero_extended: Vec<GridSequence> = f_layers
        .iter()
        .map(|f| {
            let f = f.clone().with_implicit_zero(true);
            let hi = f.last().max(lo);
            f.resample(lo, hi).map(|x| x.with_implicit_zero(true))
        })
        .collect::<Result<_>>()?;
    let u = run_ibvp(scheme, &zero_extended, n_max, j_obs, dx, Forcing::default())?.levels;
    let v = run_cauchy(scheme, &zero_extended, n_max, (lo, j_obs))?.levels;
    let mut g = Vec::with_capacity(n_max + 1);
    for level in 0..=n_max {
        let mut row = GridSequence::zeros(n, lo, r as usize);
        if level > s {
            for j in scheme.boundary_rows() {
                let mut acc: Vec<Complex64> = v[level].get(j)?.iter().map(|z| -z).collect();
                for lag in -1..=s as i64 {
                    let src = &v[(level as i64 - 1 - lag) as usize];
                    for ell in 0..=scheme.boundary_width() {
                        let b = scheme.boundary(ell, j, lag);
                        let x = src.get(1 + ell as i64)?;
                        for i in 0..n {
                            for c in 0..n {
                                acc[i] += b[(i, c)] * x[c];
                            }
                        }
                    }
                }
                row.get_mut(j)?.copy_from_slice(&acc);
            }
        }
        g.push(row);
    }
    let g_src = |level: usize, j: i64, out: &mut [Complex64]| {
        out.copy_from_slice(g[level].get(j).expect("boundary row"));
    };
    let zero_layers: Vec<GridSequence> = (0..=s).map(|_| GridSequence::zeros(n, lo, 1)).collect();
    let w = run_ibvp(scheme, &zero_layers, n_max, j_obs, dx, Forcing { boundary: Some(&g_src), interior: None })?.levels;
    let mut mismatch: f64 = 0.0;
    for level in 0..=n_max {
        for j in lo..=j_obs {
            for ((a, b), c) in u[level].get(j)?.iter().zip(v[level].get(j)?).zip(w[level].get(j)?) {
                mismatch = mismatch.max((a - b - c).norm());
            }
        }
    }
    Ok(SplitSolution { u, v, w, g, mismatch })
}

/// Per-level energies recorded during a half-line run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub dx: f64,
    pub dt: f64,
    /// First stored row index, `1 - r`.
    pub first_row: i64,
    /// `sum_{j >= 1-r} |U_j^n|^2`.
    pub energy: Vec<f64>,
    /// `sum_{j >= 1} |U_j^n|^2`.
    pub energy_interior: Vec<f64>,
    /// `|U_j^n|^2` for `j = 1-r ..= first_row + rows[n].len() - 1`.
    pub rows: Vec<Vec<f64>>,
    /// `sum_n sum_j dx |f_j^n|^2` over the initial layers.
    pub data_norm: f64,
    /// `sum_n sum_{j in boundary rows} dt |g_j^n|^2`.
    pub boundary_norm: f64,
}

fn layer_norm(f: &GridSequence, lo: i64) -> f64 {
    f.norm_sqr_between(lo, f.last())
}

/// Record energies and the traces up to row `p_max`; the observed window
/// reaches at least `min_obs` and the full support of the data.
pub fn record_run(
    scheme: &SchemeDef,
    f_layers: &[GridSequence],
    n_max: usize,
    dx: f64,
    p_max: i64,
    min_obs: i64,
    forcing: Forcing<'_>,
    mut per_step: impl FnMut(usize, &GridSequence) -> Result<()>,
) -> Result<RunRecord> {
    let lo = 1 - scheme.left_width() as i64;
    let dt = dx * scheme.mesh_ratio();
    let j_obs = full_support_edge(scheme, f_layers, n_max).max(p_max).max(min_obs);
    let mut rec = RunRecord {
        dx,
        dt,
        first_row: lo,
        energy: Vec::with_capacity(n_max + 1),
        energy_interior: Vec::with_capacity(n_max + 1),
        rows: Vec::with_capacity(n_max + 1),
        data_norm: f_layers.iter().map(|f| dx * layer_norm(f, lo)).sum(),
        boundary_norm: 0.0,
    };
    if let Some(g) = forcing.boundary {
        let mut buf = vec![Complex64::new(0.0, 0.0); scheme.dim()];
        for level in (scheme.extra_levels() + 1)..=n_max {
            for j in scheme.boundary_rows() {
                g(level, j, &mut buf);
                rec.boundary_norm += dt * buf.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
    }
    run_ibvp_with(scheme, f_layers, n_max, j_obs, dx, forcing, |level, u| {
        rec.energy.push(u.norm_sqr_between(lo, u.last()));
        rec.energy_interior.push(u.norm_sqr_between(1, u.last()));
        rec.rows.push((lo..=p_max).map(|j| u.norm_sqr_between(j, j)).collect());
        per_step(level, u)
    })?;
    Ok(rec)
}

/// Weighted sums of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormSeries {
    pub gamma: f64,
    pub p: i64,
    pub dt: f64,
    pub dx: f64,
    /// `sum_n sum_{j >= 1-r} dt dx e^{-2 gamma n dt} |U_j^n|^2`.
    pub interior: f64,
    /// `sum_n sum_{j=1-r}^{P} dt e^{-2 gamma n dt} |U_j^n|^2`.
    pub trace: f64,
    /// `sup_n sum_j dx |U_j^n|^2`.
    pub sup_norm: f64,
    /// Running values of `(interior, trace, sup_norm)` after each level.
    pub running: Vec<(f64, f64, f64)>,
}

impl NormSeries {
    /// `gamma / (gamma dt + 1) * interior + trace`.
    pub fn weighted_lhs(&self) -> f64 {
        self.gamma / (self.gamma * self.dt + 1.0) * self.interior + self.trace
    }
}

/// Sums over levels `n >= n_from`.
pub fn accumulate_norms(rec: &RunRecord, gamma: f64, p: i64, n_from: usize) -> Result<NormSeries> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidInput("gamma must be nonnegative".into()));
    }
    if p < rec.first_row {
        return Err(Error::InvalidInput(format!("P must be at least {}", rec.first_row)));
    }
    let cols = (p - rec.first_row + 1) as usize;
    if rec.rows.first().is_some_and(|r| r.len() < cols) {
        return Err(Error::InvalidInput(format!("run recorded rows only up to {}", rec.first_row + rec.rows[0].len() as i64 - 1)));
    }
    let mut out = NormSeries {
        gamma,
        p,
        dt: rec.dt,
        dx: rec.dx,
        interior: 0.0,
        trace: 0.0,
        sup_norm: 0.0,
        running: Vec::with_capacity(rec.energy.len()),
    };
    for (n, e) in rec.energy.iter().enumerate() {
        if n >= n_from {
            let w = (-2.0 * gamma * n as f64 * rec.dt).exp();
            out.interior += rec.dt * rec.dx * w * e;
            out.trace += rec.dt * w * rec.rows[n][..cols].iter().sum::<f64>();
        }
        out.sup_norm = out.sup_norm.max(rec.dx * e);
        out.running.push((out.interior, out.trace, out.sup_norm));
    }
    Ok(out)
}

/// Smooth random profile on `x >= 0`: a sum of bumps, optionally times `(1 + x)^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileGenerator {
    pub seed: u64,
    /// `(center, half width, amplitude)`.
    pub bumps: Vec<(f64, f64, f64)>,
    pub decay: bool,
    /// Data vanish beyond this abscissa.
    pub x_max: f64,
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp() * std::f64::consts::E
    }
}

impl ProfileGenerator {
    /// Bumps spread over `[0, x_max]` with `|f(x)| ~ (1 + x)^{-1}`.
    pub fn decaying(seed: u64, count: usize, x_max: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| {
                let w = rng.random_range(0.3..1.5);
                let c = rng.random_range(w..(x_max - w).max(w + 1e-9));
                (c, w, rng.random_range(-1.0..1.0))
            })
            .collect();
        Self { seed, bumps, decay: true, x_max }
    }

    /// A single bump of half width `w` centred at `c`.
    pub fn compact(seed: u64, c: f64, w: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = rng.random_range(0.5..1.5);
        Self { seed, bumps: vec![(c, w, amp)], decay: false, x_max: c + w }
    }

    pub fn value(&self, x: f64) -> f64 {
        if x > self.x_max {
            return 0.0;
        }
        let v: f64 = self.bumps.iter().map(|&(c, w, a)| a * bump((x - c) / w)).sum();
        if self.decay {
            v / (1.0 + x.max(0.0))
        } else {
            v
        }
    }

    /// Samples `f(j dx)` for `j` in `[first, x_max / dx]`, all components equal.
    pub fn sample(&self, dim: usize, dx: f64, first: i64) -> GridSequence {
        let last = (self.x_max / dx).ceil() as i64;
        GridSequence::from_fn(dim, first, (last - first + 1).max(1) as usize, |j, out| {
            let v = self.value(j as f64 * dx);
            for (k, o) in out.iter_mut().enumerate() {
                *o = Complex64::new(v * (1.0 + 0.25 * k as f64), 0.0);
            }
        })
        .with_implicit_zero(true)
    }

    /// `s + 1` identical initial layers on `j >= 1 - r`.
    pub fn layers(&self, scheme: &SchemeDef, dx: f64) -> Vec<GridSequence> {
        let first = 1 - scheme.left_width() as i64;
        (0..=scheme.extra_levels()).map(|_| self.sample(scheme.dim(), dx, first)).collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Largest tolerated growth exponent of a ratio under refinement.
pub const SLOPE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypotheses {
    pub von_neumann: bool,
    pub non_glancing: bool,
    pub uklc_min_abs: f64,
    pub uklc: bool,
    pub met: bool,
}

/// Von Neumann, non-glancing and a coarse Kreiss-Lopatinskii scan.
pub fn check_hypotheses(scheme: &SchemeDef, tol: f64) -> Result<Hypotheses> {
    let vn = symbol::von_neumann_check(scheme, 512, 1e-10)?.pass;
    let ng = symbol::find_glancing(scheme, 1e-8)?.non_glancing;
    let scan = resolvent::uklc_scan(scheme, &[1e-1, 1e-2, 1e-3, 1e-4], 128, tol, &SchemeBoundary)?;
    Ok(Hypotheses {
        von_neumann: vn,
        non_glancing: ng,
        uklc_min_abs: scan.min_abs,
        uklc: scan.plausible,
        met: vn && ng && scan.plausible,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioCell {
    pub dx: f64,
    pub dt: f64,
    pub gamma: f64,
    pub p: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub gamma: f64,
    pub p: i64,
    /// Growth exponent `d ln(ratio) / d ln(1/dt)`.
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub hypotheses: Hypotheses,
    pub cells: Vec<RatioCell>,
    pub slopes: Vec<SlopeEntry>,
    pub max_ratio: f64,
    pub max_slope: f64,
    pub vacuous: bool,
    pub bounded: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub gammas: Vec<f64>,
    /// Mesh sizes; at least four dyadic levels are expected.
    pub dxs: Vec<f64>,
    pub ps: Vec<i64>,
    /// Final time `n_max dt`.
    pub horizon: f64,
    pub uklc_tol: f64,
    /// Interior sources vanish beyond this abscissa.
    pub source_extent: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1e-3, 1e-2, 1e-1, 1.0],
            dxs: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            ps: vec![1, 3, 8],
            horizon: 10.0,
            uklc_tol: 1e-6,
            source_extent: 0.0,
        }
    }
}

fn steps_for(scheme: &SchemeDef, dx: f64, horizon: f64) -> usize {
    (horizon / (dx * scheme.mesh_ratio())).round() as usize
}

fn finish_report(hypotheses: Hypotheses, cells: Vec<RatioCell>, gammas: &[f64], ps: &[i64], label: &str) -> EstimateReport {
    let vacuous = cells.iter().all(|c| c.rhs == 0.0);
    let mut slopes = Vec::new();
    for &gamma in gammas {
        for &p in ps {
            let sel: Vec<&RatioCell> = cells.iter().filter(|c| c.gamma == gamma && c.p == p && c.rhs > 0.0).collect();
            let xs: Vec<f64> = sel.iter().map(|c| 1.0 / c.dt).collect();
            let ys: Vec<f64> = sel.iter().map(|c| c.ratio).collect();
            slopes.push(SlopeEntry { gamma, p, slope: log_log_slope(&xs, &ys) });
        }
    }
    let max_ratio = cells.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let max_slope = slopes.iter().map(|s| s.slope).fold(f64::NEG_INFINITY, f64::max);
    let bounded = !vacuous && max_slope <= SLOPE_LIMIT;
    let verdict = match (vacuous, hypotheses.met, bounded) {
        (true, _, _) => "vacuous: zero data".to_string(),
        (false, true, true) => format!("consistent with {label}"),
        (false, true, false) => "growth observed".to_string(),
        (false, false, true) => "hypotheses unmet, ratios bounded".to_string(),
        (false, false, false) => "hypotheses unmet, growth observed".to_string(),
    };
    EstimateReport { hypotheses, cells, slopes, max_ratio, max_slope, vacuous, bounded, verdict }
}

/// Ratios `LHS / RHS` of the trace estimate for nonzero initial data and zero sources.
pub fn verify_trace_estimate(
    scheme: &SchemeDef,
    data: &(dyn Fn(f64) -> Vec<GridSequence> + Sync),
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    let hyp = check_hypotheses(scheme, cfg.uklc_tol)?;
    let p_max = cfg.ps.iter().copied().max().unwrap_or(1).max(1 - scheme.left_width() as i64);
    let records: Vec<RunRecord> = cfg
        .dxs
        .par_iter()
        .map(|&dx| {
            let n = steps_for(scheme, dx, cfg.horizon);
            record_run(scheme, &data(dx), n, dx, p_max, 0, Forcing::default(), |_, _| Ok(()))
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for rec in &records {
        for &gamma in &cfg.gammas {
            for &p in &cfg.ps {
                let ns = accumulate_norms(rec, gamma, p, 0)?;
                let lhs = ns.weighted_lhs();
                let rhs = rec.data_norm;
                cells.push(RatioCell { dx: rec.dx, dt: rec.dt, gamma, p, lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } });
            }
        }
    }
    Ok(finish_report(hyp, cells, &cfg.gammas, &cfg.ps, "the trace estimate"))
}

/// Boundary data built from a continuous function of time: `g_j^n = G_j(n dt)`.
pub type TimeSignal<'a> = &'a (dyn Fn(f64, i64, &mut [Complex64]) + Sync);

fn source_cells(dx: f64, cfg: &EstimateConfig) -> i64 {
    (cfg.source_extent / dx).ceil() as i64
}

/// Ratios for zero initial data with boundary data `g` and interior source `F`;
/// `F` must vanish for `x > source_extent`.
pub fn verify_strong_stability(
    scheme: &SchemeDef,
    g: Option<TimeSignal<'_>>,
    f: Option<TimeSignal<'_>>,
    cfg: &EstimateConfig,
) -> Result<EstimateReport> {
    let hyp = check_hypotheses(scheme, cfg.uklc_tol)?;
    let s = scheme.extra_levels();
    let lo = 1 - scheme.left_width() as i64;
    let p_max = scheme.right_width() as i64;
    let results: Vec<(RunRecord, f64)> = cfg
        .dxs
        .par_iter()
        .map(|&dx| {
            let dt = dx * scheme.mesh_ratio();
            let n_max = steps_for(scheme, dx, cfg.horizon);
            let gb = |level: usize, j: i64, out: &mut [Complex64]| match g {
                Some(g) => g(level as f64 * dt, j, out),
                None => out.fill(Complex64::new(0.0, 0.0)),
            };
            let fb = |level: usize, j: i64, out: &mut [Complex64]| match f {
                Some(f) => f(level as f64 * dt, j, out),
                None => out.fill(Complex64::new(0.0, 0.0)),
            };
            let zero: Vec<GridSequence> = (0..=s).map(|_| GridSequence::zeros(scheme.dim(), lo, 1)).collect();
            let min_obs = source_cells(dx, cfg) + n_max as i64 * scheme.left_width() as i64;
            let rec = record_run(scheme, &zero, n_max, dx, p_max, min_obs, Forcing { boundary: Some(&gb), interior: Some(&fb) }, |_, _| Ok(()))?;
            Ok((rec, dt))
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (rec, dt) in &results {
        let n_max = rec.energy.len() - 1;
        for &gamma in &cfg.gammas {
            let ns = accumulate_norms(rec, gamma, p_max, s + 1)?;
            let lhs = ns.weighted_lhs();
            let mut rhs = 0.0;
            let mut buf = vec![Complex64::new(0.0, 0.0); scheme.dim()];
            for level in (s + 1)..=n_max {
                if let Some(g) = g {
                    for j in scheme.boundary_rows() {
                        g(level as f64 * dt, j, &mut buf);
                        rhs += dt * (-2.0 * gamma * level as f64 * dt).exp() * buf.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    }
                }
            }
            if let Some(f) = f {
                let w = (gamma * dt + 1.0) / gamma.max(f64::MIN_POSITIVE);
                for level in s..n_max {
                    let e = (-2.0 * gamma * (level + 1) as f64 * dt).exp();
                    for j in 1..=source_cells(rec.dx, cfg) {
                        f(level as f64 * dt, j, &mut buf);
                        rhs += w * dt * rec.dx * e * buf.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    }
                }
            }
            cells.push(RatioCell { dx: rec.dx, dt: *dt, gamma, p: p_max, lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } });
        }
    }
    Ok(finish_report(hyp, cells, &cfg.gammas, &[p_max], "strong stability"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupCell {
    pub dx: f64,
    pub dt: f64,
    /// `sup_n sum_{j >= 1-r} dx |U^n|^2 / sum_n sum_j dx |f^n|^2`.
    pub c2: f64,
    /// Largest `(E_{n+1} - E_n) - q_b(U^n)` over the run (should be `<= 0`).
    pub worst_step_excess: f64,
    /// `sup_n sum_{j >= 1} dx |U^n|^2`.
    pub sup_interior: f64,
    /// `sum_{j >= 1} dx |f|^2 + C sum_n sum_{j=1-r}^{p} dt |U_j^n|^2`.
    pub chain_bound: f64,
    pub chain_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub hypotheses: Hypotheses,
    /// Largest `||Q_hat||` on the unit circle; the energy argument needs `<= 1`.
    pub symbol_norm: f64,
    /// `C = lambda_max(q_b) / lambda`.
    pub chain_constant: Option<f64>,
    pub cells: Vec<SemigroupCell>,
    pub slope: f64,
    pub bounded: bool,
    pub per_step_holds: bool,
    pub vacuous: bool,
    pub verdict: String,
}

const STEP_TOL: f64 = 1e-12;

/// `C_2` across refinements, with the boundary energy inequality checked at every step
/// whenever the scheme is one-step and `||Q|| <= 1`.
pub fn verify_semigroup(
    scheme: &SchemeDef,
    data: &(dyn Fn(f64) -> Vec<GridSequence> + Sync),
    cfg: &EstimateConfig,
) -> Result<SemigroupReport> {
    let hyp = check_hypotheses(scheme, cfg.uklc_tol)?;
    let symbol_norm = if scheme.extra_levels() == 0 { symbol::max_symbol_norm(scheme, 1024) } else { f64::INFINITY };
    let rate = if symbol_norm <= 1.0 + 1e-12 {
        sbp::energy_decomposition(scheme).and_then(|d| sbp::boundary_energy_rate(scheme, &d)).ok()
    } else {
        None
    };
    let lambda = scheme.mesh_ratio();
    let chain_constant = rate.as_ref().map(|r| r.max_eigenvalue / lambda);
    let p = scheme.right_width() as i64;
    let cells: Vec<SemigroupCell> = cfg
        .dxs
        .par_iter()
        .map(|&dx| {
            let n_max = steps_for(scheme, dx, cfg.horizon);
            let f = data(dx);
            let mut worst = f64::NEG_INFINITY;
            let mut prev: Option<(f64, f64)> = None;
            let rec = record_run(scheme, &f, n_max, dx, p, 0, Forcing::default(), |_, u| {
                if let Some(rate) = &rate {
                    let e = u.norm_sqr_between(1, u.last());
                    if let Some((e_prev, q_prev)) = prev {
                        worst = worst.max(e - e_prev - q_prev);
                    }
                    let q = rate.value(scheme, &u.clone().with_implicit_zero(true))?;
                    prev = Some((e, q));
                }
                Ok(())
            })?;
            let sup_interior = rec.energy_interior.iter().fold(0.0f64, |m, &e| m.max(dx * e));
            let trace: f64 = rec.rows.iter().map(|r| rec.dt * r.iter().sum::<f64>()).sum();
            let data_interior: f64 = f.iter().map(|l| dx * l.norm_sqr_between(1, l.last())).sum();
            let chain_bound = chain_constant.map(|c| data_interior + c * trace).unwrap_or(f64::INFINITY);
            let sup = rec.energy.iter().fold(0.0f64, |m, &e| m.max(dx * e));
            Ok(SemigroupCell {
                dx,
                dt: rec.dt,
                c2: if rec.data_norm > 0.0 { sup / rec.data_norm } else { 0.0 },
                worst_step_excess: if rate.is_some() { worst } else { f64::NAN },
                sup_interior,
                chain_bound,
                chain_holds: sup_interior <= chain_bound * (1.0 + 1e-12) + 1e-14,
            })
        })
        .collect::<Result<_>>()?;
    let vacuous = cells.iter().all(|c| c.c2 == 0.0);
    let xs: Vec<f64> = cells.iter().map(|c| 1.0 / c.dt).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.c2).collect();
    let slope = log_log_slope(&xs, &ys);
    let bounded = !vacuous && slope <= SLOPE_LIMIT;
    let per_step_holds = rate.is_some() && cells.iter().all(|c| c.worst_step_excess <= STEP_TOL * (1.0 + c.c2));
    let verdict = if vacuous {
        "vacuous: zero data".to_string()
    } else if bounded {
        if hyp.met { "bounded, consistent with semigroup stability" } else { "bounded, hypotheses unmet" }.to_string()
    } else {
        "growth observed".to_string()
    };
    Ok(SemigroupReport { hypotheses: hyp, symbol_norm, chain_constant, cells, slope, bounded, per_step_holds, vacuous, verdict })
}

/// Growth exponent of a positive quantity against a horizon sweep.
pub fn horizon_slope(horizons: &[f64], values: &[f64]) -> f64 {
    log_log_slope(horizons, values)
}
