//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Complex Schur form `m = q t q^*` with `t` upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    if m.nrows() == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    let s = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..t.ncols() {
        for i in (j + 1)..t.nrows() {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Swap the adjacent diagonal entries `k` and `k+1` of a triangular Schur factor.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let c12 = t[(k, k + 1)];
    let d = b - a;
    let nrm = (c12.norm_sqr() + d.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let g11 = c12 / nrm;
    let g21 = d / nrm;
    let g12 = -d.conj() / nrm;
    let g22 = c12.conj() / nrm;
    let n = t.nrows();
    for i in 0..n {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * g11 + y * g21;
        t[(i, k + 1)] = x * g12 + y * g22;
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = x * g11 + y * g21;
        q[(i, k + 1)] = x * g12 + y * g22;
    }
    for j in 0..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = g11.conj() * x + g21.conj() * y;
        t[(k + 1, j)] = g12.conj() * x + g22.conj() * y;
    }
    t[(k + 1, k)] = Complex64::new(0.0, 0.0);
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Reorder a complex Schur form so that eigenvalues satisfying `select` lead.
/// Returns the number of selected eigenvalues.
pub fn reorder_schur(q: &mut CMat, t: &mut CMat, select: impl Fn(Complex64) -> bool) -> usize {
    let n = t.nrows();
    let mut placed = 0;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut k = i;
            while k > placed {
                swap_adjacent(q, t, k - 1);
                k -= 1;
            }
            placed += 1;
        }
    }
    placed
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Unit right null vector of `m` (right singular vector of the smallest singular value).
pub fn null_vector(m: &CMat) -> CVec {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^*");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    if vt.nrows() < n {
        // Wide case: a null direction is orthogonal to all rows of V^*.
        let mut full = CMat::identity(n, n);
        for r in 0..vt.nrows() {
            let row = vt.row(r).adjoint();
            full = &full - &row * row.adjoint() * &full;
        }
        let col = (0..n)
            .map(|j| full.column(j).into_owned())
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        return col.normalize();
    }
    vt.row(imin).adjoint()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

pub fn determinant(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Orthonormal basis of the column span of `m` (assumed full column rank).
pub fn orthonormalize(m: &CMat) -> CMat {
    m.clone().qr().q()
}

/// Assignment of `next` onto `prev` minimising total distance.
/// Returns `(perm, best, second)` where `next[perm[i]]` continues `prev[i]`,
/// and `second` is the cost of the best assignment differing from `perm` in
/// the values it produces (infinite if none).
pub fn match_values(prev: &[Complex64], next: &[Complex64]) -> (Vec<usize>, f64, f64) {
    let n = prev.len();
    assert_eq!(n, next.len());
    if n > 8 {
        return greedy_match(prev, next);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut costs: Vec<(Vec<usize>, f64)> = Vec::new();
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = (0..n).map(|i| (prev[i] - next[p[i]]).norm()).sum();
        costs.push((p.to_vec(), cost));
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((p.to_vec(), cost));
        }
    });
    let (bp, bc) = best.unwrap_or((Vec::new(), 0.0));
    let mut second = f64::INFINITY;
    for (p, cost) in &costs {
        let differs = (0..n).any(|i| (next[p[i]] - next[bp[i]]).norm() > 1e-10);
        if differs && *cost < second {
            second = *cost;
        }
    }
    (bp, bc, second)
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn greedy_match(prev: &[Complex64], next: &[Complex64]) -> (Vec<usize>, f64, f64) {
    let n = prev.len();
    let mut used = vec![false; n];
    let mut perm = vec![0; n];
    let mut cost = 0.0;
    for i in 0..n {
        let (j, d) = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, (prev[i] - next[j]).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        perm[i] = j;
        cost += d;
    }
    (perm, cost, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.5)
        })
    }

    #[test]
    fn reordered_schur_is_still_a_factorisation() {
        let m = sample(6);
        let (mut q, mut t) = schur(&m).unwrap();
        let k = reorder_schur(&mut q, &mut t, |z| z.norm() < 3.0);
        let back = &q * &t * q.adjoint();
        assert!((back - &m).norm() < 1e-12 * m.norm());
        for i in 0..6 {
            assert_eq!(i < k, t[(i, i)].norm() < 3.0);
        }
        let unit = q.adjoint() * &q - CMat::identity(6, 6);
        assert!(unit.norm() < 1e-13);
    }

    #[test]
    fn null_vector_of_singular_matrix() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let v = null_vector(&m);
        assert!((&m * &v).norm() < 1e-14);
    }

    #[test]
    fn matching_reports_ambiguity() {
        let prev = [c(1.0, 0.0), c(-1.0, 0.0)];
        let next = [c(0.0, 1.0), c(0.0, -1.0)];
        let (_, best, second) = match_values(&prev, &next);
        assert!((best - second).abs() < 1e-12);
    }
}
