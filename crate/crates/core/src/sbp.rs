//! Discrete Leibniz rule, summation-by-parts identities and energy decompositions
//! of one-step schemes.
//!
//! Quadratic terms are written with the forward difference `D = T - I`. The
//! hermitian identity is normalised as
//! `Re(u^* A D^k u) = D(q_{A,k}(u, ..., D^{k-1} u)) + sum_{j=1}^{k} alpha_{j,k} (D^j u)^* A D^j u`
//! and the skew one (real sequences, `k >= 2`) as
//! `u^T A D^k u = D(q_{A,k}(u, ..., D^{k-1} u)) + sum_{j=1}^{k-1} beta_{j,k} (D^j u)^T A D^{j+1} u`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_op, discrete_derivative, DifferenceOp, GridSequence};
use crate::linalg::CMat;
use crate::scheme::SchemeDef;

pub const MAX_ORDER: usize = 12;
const CHECK_TOL: f64 = 1e-10;

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `D^k (u^* v) = sum c(j1, j2) (D^{j1} u)^* D^{j2} v` over `j1 + j2 >= k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeibnizTable {
    pub order: usize,
    /// `(j1, j2, c)` with `c = k! / ((k-j1)! (k-j2)! (j1+j2-k)!)`.
    pub entries: Vec<(usize, usize, u64)>,
}

impl LeibnizTable {
    pub fn coefficient(&self, j1: usize, j2: usize) -> u64 {
        let k = self.order;
        if j1 > k || j2 > k || j1 + j2 < k {
            return 0;
        }
        factorial(k) / (factorial(k - j1) * factorial(k - j2) * factorial(j1 + j2 - k))
    }
}

pub fn leibniz_table(k: usize) -> Result<LeibnizTable> {
    if k > MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {k} exceeds {MAX_ORDER}")));
    }
    let mut t = LeibnizTable { order: k, entries: Vec::new() };
    for j1 in 0..=k {
        for j2 in (k - j1)..=k {
            let c = t.coefficient(j1, j2);
            t.entries.push((j1, j2, c));
        }
    }
    Ok(t)
}

/// Scalar skeleton of the hermitian identity: `q_{A,k} = Q (x) A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianTable {
    pub order: usize,
    /// `k x k` symmetric matrix of coefficients of `(D^a u)^* A (D^b u)`.
    pub q: DMatrix<f64>,
    /// `alpha[j-1] = alpha_{j,k}`.
    pub alpha: Vec<f64>,
}

/// Scalar skeleton of the skew identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewTable {
    pub order: usize,
    /// Strictly upper `k x k` coefficients of `(D^a u)^T A (D^b u)`, `a < b`.
    pub q_pairs: DMatrix<f64>,
    /// `beta[j-1] = beta_{j,k}`.
    pub beta: Vec<f64>,
}

fn leibniz_matrix(k: usize) -> DMatrix<f64> {
    let t = leibniz_table(k).expect("order in range");
    DMatrix::from_fn(k + 1, k + 1, |a, b| t.coefficient(a, b) as f64)
}

/// Recursive construction: expand `D^k(u^* A u)` by Leibniz and reduce every
/// off-diagonal pair with the identity of lower order.
pub fn hermitian_table(k: usize) -> Result<HermitianTable> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidInput(format!("order {k} outside 1..={MAX_ORDER}")));
    }
    let mut tables: Vec<HermitianTable> = Vec::with_capacity(k);
    for order in 1..=k {
        let prev = leibniz_matrix(order - 1);
        let cur = leibniz_matrix(order);
        let mut q = DMatrix::zeros(order, order);
        q.view_mut((0, 0), (order, order)).copy_from(&(prev * 0.5));
        let mut alpha = vec![0.0; order];
        for j1 in 1..=order {
            for j2 in j1..=order {
                let c = cur[(j1, j2)];
                if c == 0.0 {
                    continue;
                }
                if j1 == j2 {
                    alpha[j1 - 1] -= 0.5 * c;
                    continue;
                }
                let m = j2 - j1;
                let sub = &tables[m - 1];
                let mut blk = q.view_mut((j1, j1), (m, m));
                blk -= &sub.q * c;
                for i in 1..=m {
                    alpha[j1 + i - 1] -= c * sub.alpha[i - 1];
                }
            }
        }
        tables.push(HermitianTable { order, q, alpha });
    }
    Ok(tables.pop().unwrap())
}

/// Recursion `u^T A D^{k+1} u = D(u^T A D^k u) - (Du)^T A D^k u - (Du)^T A D^{k+1} u`.
pub fn skew_table(k: usize) -> Result<SkewTable> {
    if !(2..=MAX_ORDER).contains(&k) {
        return Err(Error::InvalidInput(format!("order {k} outside 2..={MAX_ORDER}")));
    }
    let mut q2 = DMatrix::zeros(2, 2);
    q2[(0, 1)] = 1.0;
    let mut tables = vec![SkewTable { order: 2, q_pairs: q2, beta: vec![-1.0] }];
    for order in 2..k {
        let next = order + 1;
        let mut q = DMatrix::zeros(next, next);
        let mut beta = vec![0.0; next - 1];
        q[(0, order)] += 1.0;
        let subtract_shifted = |t: &SkewTable, q: &mut DMatrix<f64>, beta: &mut Vec<f64>| {
            let m = t.order;
            let mut blk = q.view_mut((1, 1), (m, m));
            blk -= &t.q_pairs;
            for i in 1..m {
                beta[i] -= t.beta[i - 1];
            }
        };
        if order - 1 == 1 {
            beta[0] -= 1.0;
        } else {
            let t = tables.iter().find(|t| t.order == order - 1).unwrap().clone();
            subtract_shifted(&t, &mut q, &mut beta);
        }
        let t = tables.iter().find(|t| t.order == order).unwrap().clone();
        subtract_shifted(&t, &mut q, &mut beta);
        tables.push(SkewTable { order: next, q_pairs: q, beta });
    }
    Ok(tables.pop().unwrap())
}

fn kron(s: &DMatrix<f64>, a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(s.nrows() * n, s.ncols() * n, |i, j| a[(i % n, j % n)] * s[(i / n, j / n)])
}

fn random_sequence(rng: &mut ChaCha8Rng, dim: usize, len: usize, complex: bool) -> GridSequence {
    GridSequence::from_fn(dim, 0, len, |_, out| {
        for v in out.iter_mut() {
            let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            *v = Complex64::new(rng.random_range(-1.0..1.0), im);
        }
    })
    .with_implicit_zero(true)
}

/// `D^0 u, ..., D^k u` on a common window (implicit zeros outside the support).
fn differences(u: &GridSequence, k: usize) -> Result<Vec<GridSequence>> {
    (0..=k).map(|i| discrete_derivative(i, u)).collect()
}

fn form(x: &[Complex64], m: &CMat, y: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..y.len() {
            acc += x[i].conj() * m[(i, j)] * y[j];
        }
    }
    acc
}

/// Value of the block quadratic form `X^* M X` with `X = (D^0 u_j, ..., D^{k-1} u_j)`.
fn stacked_form(diffs: &[GridSequence], j: i64, m: &CMat, k: usize) -> Result<Complex64> {
    let mut x = Vec::new();
    for d in diffs.iter().take(k) {
        x.extend_from_slice(d.get(j)?);
    }
    Ok(form(&x, m, &x))
}

#[derive(Debug, Clone)]
pub struct HermitianIdentity {
    pub order: usize,
    /// `Nk x Nk` hermitian matrix of `q_{A,k}` in the variables `(u, ..., D^{k-1} u)`.
    pub q_form: CMat,
    pub alpha: Vec<f64>,
}

/// Pointwise residual of the hermitian identity on one sequence.
pub fn hermitian_residual(a: &CMat, id: &HermitianIdentity, u: &GridSequence) -> Result<f64> {
    let k = id.order;
    let d = differences(u, k)?;
    let (lo, hi) = (u.first() - k as i64 - 1, u.last() + 1);
    let mut worst: f64 = 0.0;
    for j in lo..=hi {
        let lhs = form(d[0].get(j)?, a, d[k].get(j)?).re;
        let dq = stacked_form(&d, j + 1, &id.q_form, k)? - stacked_form(&d, j, &id.q_form, k)?;
        let mut rhs = dq.re;
        for (i, al) in id.alpha.iter().enumerate() {
            let dj = d[i + 1].get(j)?;
            rhs += al * form(dj, a, dj).re;
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Identity for hermitian `A`; verified on random sequences before returning.
pub fn ibp_hermitian(a: &CMat, k: usize) -> Result<HermitianIdentity> {
    if !a.is_square() || (a - a.adjoint()).norm() > 1e-12 * (1.0 + a.norm()) {
        return Err(Error::InvalidInput("matrix is not hermitian".into()));
    }
    let t = hermitian_table(k)?;
    let id = HermitianIdentity { order: k, q_form: kron(&t.q, a), alpha: t.alpha };
    let mut rng = ChaCha8Rng::seed_from_u64(0x1bb0 + k as u64);
    let scale = 1.0 + a.norm() * (2f64).powi(2 * k as i32);
    for _ in 0..8 {
        let u = random_sequence(&mut rng, a.nrows(), 12, true);
        let res = hermitian_residual(a, &id, &u)?;
        if res > CHECK_TOL * scale {
            return Err(Error::IdentityCheck { residual: res, tol: CHECK_TOL * scale });
        }
    }
    Ok(id)
}

#[derive(Debug, Clone)]
pub struct SkewIdentity {
    pub order: usize,
    /// `Nk x Nk` real symmetric matrix of `q_{A,k}`.
    pub q_form: DMatrix<f64>,
    pub beta: Vec<f64>,
}

fn pairs_to_form(pairs: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let k = pairs.nrows();
    let mut m = DMatrix::zeros(n * k, n * k);
    for x in 0..k {
        for y in 0..k {
            let s = pairs[(x, y)];
            if s == 0.0 {
                continue;
            }
            let mut blk = m.view_mut((x * n, y * n), (n, n));
            blk += a * (0.5 * s);
            let mut blk = m.view_mut((y * n, x * n), (n, n));
            blk += a.transpose() * (0.5 * s);
        }
    }
    m
}

pub fn skew_residual(a: &DMatrix<f64>, id: &SkewIdentity, u: &GridSequence) -> Result<f64> {
    let k = id.order;
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let qc = id.q_form.map(|x| Complex64::new(x, 0.0));
    let d = differences(u, k)?;
    let (lo, hi) = (u.first() - k as i64 - 1, u.last() + 1);
    let mut worst: f64 = 0.0;
    for j in lo..=hi {
        let lhs = form(d[0].get(j)?, &ac, d[k].get(j)?).re;
        let dq = stacked_form(&d, j + 1, &qc, k)? - stacked_form(&d, j, &qc, k)?;
        let mut rhs = dq.re;
        for (i, b) in id.beta.iter().enumerate() {
            rhs += b * form(d[i + 1].get(j)?, &ac, d[i + 2].get(j)?).re;
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Identity for real skew-symmetric `A` and real sequences, `k >= 2`.
pub fn ibp_skew(a: &DMatrix<f64>, k: usize) -> Result<SkewIdentity> {
    if !a.is_square() || (a + a.transpose()).norm() > 1e-12 * (1.0 + a.norm()) {
        return Err(Error::InvalidInput("matrix is not skew-symmetric".into()));
    }
    let t = skew_table(k)?;
    let id = SkewIdentity { order: k, q_form: pairs_to_form(&t.q_pairs, a), beta: t.beta };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ce0 + k as u64);
    let scale = 1.0 + a.norm() * (2f64).powi(2 * k as i32);
    for _ in 0..8 {
        let u = random_sequence(&mut rng, a.nrows(), 12, false);
        let res = skew_residual(a, &id, &u)?;
        if res > CHECK_TOL * scale {
            return Err(Error::IdentityCheck { residual: res, tol: CHECK_TOL * scale });
        }
    }
    Ok(id)
}

fn require_one_step(scheme: &SchemeDef) -> Result<()> {
    if scheme.extra_levels() != 0 {
        return Err(Error::Unsupported("energy decompositions need a one-step scheme".into()));
    }
    let n = scheme.dim();
    if (scheme.coefficient_sum() - DMatrix::identity(n, n)).abs().max() > 1e-12 {
        return Err(Error::InvalidInput("scheme is not consistent".into()));
    }
    Ok(())
}

/// `Q = I + T^{-r} sum_{l=1}^{p+r} At_l D^l`; returns `At_1, ..., At_{p+r}`.
pub fn consistent_decomposition(scheme: &SchemeDef) -> Result<Vec<DMatrix<f64>>> {
    require_one_step(scheme)?;
    let n = scheme.dim();
    let r = scheme.left_width();
    let k = r + scheme.right_width();
    Ok((1..=k)
        .map(|i| {
            let mut acc = DMatrix::zeros(n, n);
            for shift in scheme.shifts() {
                let w = binomial((r as i64 + shift) as usize, i) - binomial(r, i);
                acc += scheme.interior(shift, 0) * w;
            }
            acc
        })
        .collect())
}

/// Terms of the energy identity
/// `2 U^*(Q-I)U + |(Q-I)U|^2 = T^{-r} D q + T^{-r} sum (D^l U)^* S_l D^l U + T^{-r} sum (D^l U)^* St_l D^{l+1} U`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyDecomposition {
    pub a_tilde: Vec<DMatrix<f64>>,
    /// Symmetric form on `(U, ..., D^{p+r-1} U)`.
    pub q_form: DMatrix<f64>,
    /// `S_1, ..., S_{p+r}`, symmetric.
    pub s: Vec<DMatrix<f64>>,
    /// `St_1, ..., St_{p+r-1}`, skew-symmetric.
    pub s_tilde: Vec<DMatrix<f64>>,
    /// Scalar three-point coefficients `(S_1, S_2)` when they apply.
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.abs() <= 1e-15)
}

/// Reduce `2 U^T(Q-I)U + |(Q-I)U|^2` to canonical form, then check the identity
/// on random sequences.
pub fn energy_decomposition(scheme: &SchemeDef) -> Result<EnergyDecomposition> {
    let at = consistent_decomposition(scheme)?;
    let n = scheme.dim();
    let r = scheme.left_width();
    let k = at.len();
    let zero = DMatrix::<f64>::zeros(n, n);
    let mut dec = EnergyDecomposition {
        a_tilde: at.clone(),
        q_form: DMatrix::zeros(n * k, n * k),
        s: vec![zero.clone(); k],
        s_tilde: vec![zero.clone(); k.saturating_sub(1)],
        d1: None,
        d2: None,
    };
    if k == 0 {
        return Ok(dec);
    }
    // Coefficients M[a][b] of (D^a U)^T M (D^b U), a, b in 0..=k.
    let mut m = vec![vec![zero.clone(); k + 1]; k + 1];
    for a in 0..=r.min(k) {
        for b in 1..=k {
            m[a][b] += &at[b - 1] * (2.0 * binomial(r, a));
        }
    }
    for a in 1..=k {
        for b in 1..=k {
            m[a][b] += at[a - 1].transpose() * &at[b - 1];
        }
    }
    for a in 0..=k {
        let g = sym(&m[a][a]);
        if is_zero(&g) {
            continue;
        }
        if a == 0 {
            return Err(Error::Irreducible("undifferentiated term U^T G U".into()));
        }
        dec.s[a - 1] += g;
    }
    for a in 0..=k {
        for b in (a + 1)..=k {
            let g = &m[a][b] + m[b][a].transpose();
            let gs = sym(&g);
            let gk = (&g - g.transpose()) * 0.5;
            let span = b - a;
            if !is_zero(&gs) {
                let t = hermitian_table(span)?;
                for x in 0..span {
                    for y in 0..span {
                        let mut blk = dec.q_form.view_mut(((a + x) * n, (a + y) * n), (n, n));
                        blk += &gs * t.q[(x, y)];
                    }
                }
                for i in 1..=span {
                    dec.s[a + i - 1] += &gs * t.alpha[i - 1];
                }
            }
            if !is_zero(&gk) {
                if span == 1 {
                    if a == 0 {
                        return Err(Error::Irreducible(
                            "skew-symmetric part of the first-order coefficient".into(),
                        ));
                    }
                    dec.s_tilde[a - 1] += &gk;
                } else {
                    let t = skew_table(span)?;
                    let f = pairs_to_form(&t.q_pairs, &gk);
                    let mut blk = dec.q_form.view_mut((a * n, a * n), (span * n, span * n));
                    blk += f;
                    for i in 1..span {
                        dec.s_tilde[a + i - 1] += &gk * t.beta[i - 1];
                    }
                }
            }
        }
    }
    if n == 1 && k <= 2 {
        dec.d1 = Some(dec.s[0][(0, 0)]);
        dec.d2 = Some(if k == 2 { dec.s[1][(0, 0)] } else { 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xe7e1);
    for _ in 0..8 {
        let u = random_sequence(&mut rng, n, 10, false);
        let res = energy_residual(scheme, &dec, &u)?;
        let scale = 1.0 + at.iter().map(|a| a.norm()).sum::<f64>().powi(2) * 4f64.powi(k as i32);
        if res > CHECK_TOL * scale {
            return Err(Error::IdentityCheck { residual: res, tol: CHECK_TOL * scale });
        }
    }
    Ok(dec)
}

fn real_form(x: &[Complex64], m: &DMatrix<f64>, y: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            acc += m[(i, j)] * (x[i].conj() * y[j]).re;
        }
    }
    acc
}

/// `sum_l (D^l U_j)^* S_l D^l U_j + sum_l (D^l U_j)^* St_l D^{l+1} U_j` (real part).
fn remainder_at(dec: &EnergyDecomposition, d: &[GridSequence], j: i64) -> Result<f64> {
    let mut acc = 0.0;
    for (l, s) in dec.s.iter().enumerate() {
        let x = d[l + 1].get(j)?;
        acc += real_form(x, s, x);
    }
    for (l, s) in dec.s_tilde.iter().enumerate() {
        acc += real_form(d[l + 1].get(j)?, s, d[l + 2].get(j)?);
    }
    Ok(acc)
}

fn q_at(dec: &EnergyDecomposition, d: &[GridSequence], j: i64) -> Result<f64> {
    let k = dec.a_tilde.len();
    let mut x = Vec::new();
    for di in d.iter().take(k) {
        x.extend_from_slice(di.get(j)?);
    }
    Ok(real_form(&x, &dec.q_form, &x))
}

fn interior_op(scheme: &SchemeDef) -> DifferenceOp {
    let taps = scheme.shifts().map(|l| (l, scheme.interior(l, 0).clone())).collect();
    DifferenceOp::new(scheme.dim(), taps).expect("blocks have the scheme dimension")
}

/// Largest pointwise residual of the energy identity on `u` (implicit zeros outside).
pub fn energy_residual(scheme: &SchemeDef, dec: &EnergyDecomposition, u: &GridSequence) -> Result<f64> {
    let k = dec.a_tilde.len();
    let r = scheme.left_width() as i64;
    let u = u.clone().with_implicit_zero(true);
    let qu = apply_op(&interior_op(scheme), &u)?;
    let d = differences(&u, k)?;
    let mut worst: f64 = 0.0;
    for j in (u.first() - k as i64 - 1 + r)..=(u.last() + r + 1) {
        let uj = u.get(j)?;
        let w: Vec<Complex64> = qu.get(j)?.iter().zip(uj).map(|(a, b)| a - b).collect();
        let lhs: f64 = 2.0 * uj.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
            + w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let m = j - r;
        let rhs = q_at(dec, &d, m + 1)? - q_at(dec, &d, m)? + remainder_at(dec, &d, m)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThreePointCriterion {
    pub d1: f64,
    pub d2: f64,
    pub stable: bool,
}

/// `|Q_hat|^2 - 1 = d1 s + d2 s^2` with `s = |e^{i xi} - 1|^2 in [0, 4]`, so the
/// scheme is `l2`-contractive iff `d1 <= 0` and `d1 + 4 d2 <= 0`.
pub fn cauchy_criterion_3pt(a_minus: f64, a_zero: f64, a_plus: f64, tol: f64) -> Result<ThreePointCriterion> {
    let scheme = crate::fixtures::three_point(1.0, a_minus, a_zero, a_plus);
    let dec = energy_decomposition(&scheme)?;
    let (d1, d2) = (dec.d1.unwrap(), dec.d2.unwrap());
    Ok(ThreePointCriterion { d1, d2, stable: d1 <= tol && d1 + 4.0 * d2 <= tol })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// `||Q U||^2 - ||U||^2`.
    pub lhs: f64,
    /// Sum of the non-telescoping remainder over the lattice.
    pub rhs: f64,
    pub residual: f64,
}

/// One step of the whole-line energy balance for finitely supported `u`.
pub fn energy_balance_step(scheme: &SchemeDef, dec: &EnergyDecomposition, u: &GridSequence) -> Result<EnergyBalance> {
    let k = dec.a_tilde.len() as i64;
    let u = u.clone().with_implicit_zero(true);
    let qu = apply_op(&interior_op(scheme), &u)?;
    let lhs = qu.norm_sqr() - u.norm_sqr();
    let d = differences(&u, k as usize)?;
    let mut rhs = 0.0;
    for m in (u.first() - k - 1)..=(u.last() + 1) {
        rhs += remainder_at(dec, &d, m)?;
    }
    Ok(EnergyBalance { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Quadratic form bounding the one-step energy change on the half line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRate {
    /// Symmetric matrix in the variables `(U_{1-r}, ..., U_p)`.
    pub form: DMatrix<f64>,
    /// Largest eigenvalue of `form`, clipped at zero.
    pub max_eigenvalue: f64,
}

impl BoundaryRate {
    /// Value at a layer stored from index `1 - r`.
    pub fn value(&self, scheme: &SchemeDef, layer: &GridSequence) -> Result<f64> {
        let r = scheme.left_width() as i64;
        let p = scheme.right_width() as i64;
        let mut x = Vec::new();
        for j in (1 - r)..=p {
            x.extend_from_slice(layer.get(j)?);
        }
        Ok(real_form(&x, &self.form, &x))
    }
}

/// `q_b(U_{1-r}, ..., U_p) = -q(U_{1-r}, ..., D^{p+r-1} U_{1-r}) - sum_{j=1-p-2r}^{-r} R_j(zero-extended U)`,
/// so that `sum_{j>=1} |U^{n+1}_j|^2 - sum_{j>=1} |U^n_j|^2 <= q_b` whenever `||Q|| <= 1`.
pub fn boundary_energy_rate(scheme: &SchemeDef, dec: &EnergyDecomposition) -> Result<BoundaryRate> {
    let n = scheme.dim();
    let r = scheme.left_width() as i64;
    let p = scheme.right_width() as i64;
    let k = (p + r) as usize;
    let width = (p + r) as usize;
    let eval = |x: &[f64]| -> Result<f64> {
        let u = GridSequence::from_fn(n, 1 - r, width, |j, out| {
            let off = (j - (1 - r)) as usize * n;
            for d in 0..n {
                out[d] = Complex64::new(x[off + d], 0.0);
            }
        })
        .with_implicit_zero(true);
        let d = differences(&u, k)?;
        let mut v = -q_at(dec, &d, 1 - r)?;
        for m in (1 - p - 2 * r)..=(-r) {
            v -= remainder_at(dec, &d, m)?;
        }
        Ok(v)
    };
    let dim = n * width;
    let mut form = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut diag = vec![0.0; dim];
    for i in 0..dim {
        e[i] = 1.0;
        diag[i] = eval(&e)?;
        e[i] = 0.0;
        form[(i, i)] = diag[i];
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            e[i] = 1.0;
            e[j] = 1.0;
            let v = 0.5 * (eval(&e)? - diag[i] - diag[j]);
            e[i] = 0.0;
            e[j] = 0.0;
            form[(i, j)] = v;
            form[(j, i)] = v;
        }
    }
    let max_eigenvalue = if dim == 0 {
        0.0
    } else {
        form.clone().symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max)
    };
    Ok(BoundaryRate { form, max_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn leibniz_second_order() {
        let t = leibniz_table(2).unwrap();
        assert_eq!(t.coefficient(0, 2), 1);
        assert_eq!(t.coefficient(1, 1), 2);
        assert_eq!(t.coefficient(1, 2), 2);
        assert_eq!(t.coefficient(2, 1), 2);
        assert_eq!(t.coefficient(2, 2), 1);
        assert_eq!(t.coefficient(0, 1), 0);
        assert!(leibniz_table(13).is_err());
    }

    #[test]
    fn base_cases() {
        let h = hermitian_table(1).unwrap();
        assert_eq!(h.alpha, vec![-0.5]);
        assert_eq!(h.q[(0, 0)], 0.5);
        let s = skew_table(2).unwrap();
        assert_eq!(s.beta, vec![-1.0]);
        assert_eq!(s.q_pairs[(0, 1)], 1.0);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let id = ibp_skew(&a, 2).unwrap();
        let want = DMatrix::from_fn(4, 4, |i, j| match (i / 2, j / 2) {
            (0, 1) => 0.5 * a[(i % 2, j % 2)],
            (1, 0) => -0.5 * a[(i % 2, j % 2)],
            _ => 0.0,
        });
        assert_eq!(id.q_form, want);
    }

    #[test]
    fn upwind_and_shift_decompositions() {
        let at = consistent_decomposition(&fixtures::upwind(1.0, 0.5)).unwrap();
        assert_eq!(at.len(), 1);
        assert!((at[0][(0, 0)] + 0.5).abs() < 1e-15);
        let at = consistent_decomposition(&fixtures::lax_friedrichs(1.0, 0.5)).unwrap();
        assert!((at[0][(0, 0)] + 0.5).abs() < 1e-15);
        assert!((at[1][(0, 0)] - 0.25).abs() < 1e-15);
        let at = consistent_decomposition(&fixtures::pure_shift(2)).unwrap();
        assert_eq!(at, vec![DMatrix::identity(2, 2)]);
        let dec = energy_decomposition(&fixtures::identity(1)).unwrap();
        assert!(dec.a_tilde.is_empty());
    }

    #[test]
    fn three_point_coefficients() {
        let la = 0.5f64;
        let lf = cauchy_criterion_3pt((1.0 + la) / 2.0, 0.0, (1.0 - la) / 2.0, 1e-10).unwrap();
        assert!((lf.d1 - (la * la - 1.0)).abs() < 1e-14);
        assert!((lf.d2 - (1.0 - la * la) / 4.0).abs() < 1e-14);
        assert!(lf.stable);
        let up = cauchy_criterion_3pt(la, 1.0 - la, 0.0, 1e-10).unwrap();
        assert!((up.d1 - la * (la - 1.0)).abs() < 1e-14 && up.d2.abs() < 1e-14);
        let lw = cauchy_criterion_3pt((la + la * la) / 2.0, 1.0 - la * la, (la * la - la) / 2.0, 1e-10).unwrap();
        assert!(lw.d1.abs() < 1e-14);
        assert!((lw.d2 + la * la * (1.0 - la * la) / 4.0).abs() < 1e-14);
        let edge = cauchy_criterion_3pt(1.0, 0.0, 0.0, 1e-10).unwrap();
        assert!(edge.stable && edge.d1.abs() < 1e-15 && edge.d2.abs() < 1e-15);
        let avg = cauchy_criterion_3pt(0.5, 0.0, 0.5, 1e-10).unwrap();
        assert!(avg.stable);
        let bad = cauchy_criterion_3pt(1.1, 0.0, -0.1, 1e-10).unwrap();
        assert!(!bad.stable && (bad.d1 - 0.44).abs() < 1e-12);
    }

    #[test]
    fn nonsymmetric_first_order_coefficient_is_irreducible() {
        let mut s = SchemeDef::zeros(2, 1, 0, 0, 0, 1.0).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.5]);
        s.set_interior(-1, 0, a.clone()).unwrap();
        s.set_interior(0, 0, DMatrix::identity(2, 2) - a).unwrap();
        assert!(matches!(energy_decomposition(&s), Err(Error::Irreducible(_))));
    }

    /// Fit `f(xi) = sum_{j=1}^{k} c_j s^j`, `s = |e^{i xi} - 1|^2`, by least squares.
    fn fit_in_s(k: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let xs: Vec<f64> = (1..400).map(|i| (1.0 - 2.0 * i as f64 / 400.0).acos()).collect();
        let a = DMatrix::from_fn(xs.len(), k, |i, j| (2.0 - 2.0 * xs[i].cos()).powi(j as i32 + 1));
        let b = nalgebra::DVector::from_iterator(xs.len(), xs.iter().map(|&x| f(x)));
        a.svd(true, true).solve(&b, 1e-14).unwrap().iter().copied().collect()
    }

    #[test]
    fn alpha_matches_fourier_fit() {
        for k in 1..=MAX_ORDER {
            let want = fit_in_s(k, |x| (Complex64::from_polar(1.0, x) - 1.0).powi(k as i32).re);
            let got = hermitian_table(k).unwrap().alpha;
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-5 * (1.0 + w.abs()), "k={k}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn beta_matches_fourier_fit() {
        for k in 2..=MAX_ORDER {
            let want = fit_in_s(k - 1, |x| (Complex64::from_polar(1.0, x) - 1.0).powi(k as i32).im / x.sin());
            let got = skew_table(k).unwrap().beta;
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-5 * (1.0 + w.abs()), "k={k}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn identities_verify_up_to_max_order() {
        let h = CMat::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0), Complex64::new(0.3, -0.7),
            Complex64::new(0.3, 0.7), Complex64::new(-1.0, 0.0),
        ]);
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        for k in 1..=MAX_ORDER {
            ibp_hermitian(&h, k).unwrap();
            if k >= 2 {
                ibp_skew(&j, k).unwrap();
            }
        }
        assert!(ibp_hermitian(&CMat::from_element(1, 1, Complex64::new(0.0, 1.0)), 1).is_err());
        assert!(ibp_skew(&DMatrix::identity(2, 2), 2).is_err());
        assert!(ibp_skew(&j, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn energy_balance_holds(la in 0.05f64..1.0, seed in 0u64..1000, which in 0usize..3) {
            let s = [fixtures::upwind(1.0, la), fixtures::lax_friedrichs(1.0, la), fixtures::lax_wendroff(1.0, la)][which].clone();
            let dec = energy_decomposition(&s).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_sequence(&mut rng, 1, 20, true);
            let b = energy_balance_step(&s, &dec, &u).unwrap();
            prop_assert!(b.residual <= 1e-12 * (1.0 + u.norm_sqr()));
        }

        #[test]
        fn half_line_rate_bounds_energy_change(la in 0.05f64..1.0, seed in 0u64..1000, which in 0usize..3) {
            let s = [fixtures::upwind(1.0, la), fixtures::lax_friedrichs(1.0, la), fixtures::lax_wendroff(1.0, la)][which].clone();
            let dec = energy_decomposition(&s).unwrap();
            let rate = boundary_energy_rate(&s, &dec).unwrap();
            let r = s.left_width() as i64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = GridSequence::real_scalar(1 - r, &vals).with_implicit_zero(true);
            let qu = apply_op(&interior_op(&s), &u).unwrap();
            let new_energy = qu.norm_sqr_between(1, qu.last());
            let old_energy = u.norm_sqr_between(1, u.last());
            let bound = rate.value(&s, &u).unwrap();
            prop_assert!(new_energy - old_energy <= bound + 1e-12);
        }

        #[test]
        fn leibniz_rule_matches_direct_differences(k in 0usize..7, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_sequence(&mut rng, 1, 9, true);
            let v = random_sequence(&mut rng, 1, 9, true);
            let prod = GridSequence::from_fn(1, 0, 9, |j, out| {
                out[0] = u.get(j).unwrap()[0].conj() * v.get(j).unwrap()[0]
            }).with_implicit_zero(true);
            let direct = discrete_derivative(k, &prod).unwrap();
            let du = differences(&u, k).unwrap();
            let dv = differences(&v, k).unwrap();
            let t = leibniz_table(k).unwrap();
            for j in direct.first()..=direct.last() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(a, b, c) in &t.entries {
                    acc += du[a].get(j).unwrap()[0].conj() * dv[b].get(j).unwrap()[0] * c as f64;
                }
                prop_assert!((acc - direct.get(j).unwrap()[0]).norm() < 1e-9);
            }
        }
    }
}
