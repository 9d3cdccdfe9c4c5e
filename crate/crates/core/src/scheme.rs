//! Scheme definitions: interior stencil, boundary closure and validation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, CMat};

/// A multistep finite-difference scheme on the half line.
///
/// Interior rows (`j >= 1`) advance by
/// `U_j^{n+1} = sum_{lag=0}^{s} sum_{shift=-r}^{p} A[shift, lag] U_{j+shift}^{n-lag}`.
/// Boundary rows (`j = 1-r..=0`) read
/// `U_j^{n+1} = sum_{lag=-1}^{s} sum_{shift=0}^{q} B[shift, j, lag] U_{1+shift}^{n-lag} + g_j^{n+1}`,
/// where `lag = -1` refers to the freshly computed level.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeDef {
    dim: usize,
    left_width: usize,
    right_width: usize,
    boundary_width: usize,
    extra_levels: usize,
    mesh_ratio: f64,
    interior: Vec<DMatrix<f64>>,
    boundary: Vec<DMatrix<f64>>,
}

impl SchemeDef {
    /// Zero scheme with the given stencil shape.
    pub fn zeros(
        dim: usize,
        left_width: usize,
        right_width: usize,
        boundary_width: usize,
        extra_levels: usize,
        mesh_ratio: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedScheme("state dimension must be positive".into()));
        }
        if !(mesh_ratio.is_finite() && mesh_ratio > 0.0) {
            return Err(Error::MalformedScheme(format!("mesh ratio {mesh_ratio} must be positive")));
        }
        let n_int = (left_width + right_width + 1) * (extra_levels + 1);
        let n_bdy = (boundary_width + 1) * left_width * (extra_levels + 2);
        Ok(Self {
            dim,
            left_width,
            right_width,
            boundary_width,
            extra_levels,
            mesh_ratio,
            interior: vec![DMatrix::zeros(dim, dim); n_int],
            boundary: vec![DMatrix::zeros(dim, dim); n_bdy],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Number of points the stencil reaches to the left (`r`).
    pub fn left_width(&self) -> usize {
        self.left_width
    }
    /// Number of points the stencil reaches to the right (`p`).
    pub fn right_width(&self) -> usize {
        self.right_width
    }
    /// Number of interior points read by the boundary rows, minus one (`q`).
    pub fn boundary_width(&self) -> usize {
        self.boundary_width
    }
    /// Number of past time levels beyond the current one (`s`).
    pub fn extra_levels(&self) -> usize {
        self.extra_levels
    }
    /// `dt / dx`.
    pub fn mesh_ratio(&self) -> f64 {
        self.mesh_ratio
    }
    pub fn shifts(&self) -> std::ops::RangeInclusive<i64> {
        -(self.left_width as i64)..=self.right_width as i64
    }
    pub fn boundary_rows(&self) -> std::ops::RangeInclusive<i64> {
        1 - self.left_width as i64..=0
    }

    fn interior_index(&self, shift: i64, lag: usize) -> Result<usize> {
        let r = self.left_width as i64;
        if shift < -r || shift > self.right_width as i64 || lag > self.extra_levels {
            return Err(Error::MalformedScheme(format!(
                "interior index (shift {shift}, lag {lag}) out of range"
            )));
        }
        Ok((shift + r) as usize * (self.extra_levels + 1) + lag)
    }

    fn boundary_index(&self, shift: usize, row: i64, lag: i64) -> Result<usize> {
        let r = self.left_width as i64;
        if shift > self.boundary_width
            || row < 1 - r
            || row > 0
            || lag < -1
            || lag > self.extra_levels as i64
        {
            return Err(Error::MalformedScheme(format!(
                "boundary index (shift {shift}, row {row}, lag {lag}) out of range"
            )));
        }
        let row_idx = (row + r - 1) as usize;
        Ok((shift * self.left_width + row_idx) * (self.extra_levels + 2) + (lag + 1) as usize)
    }

    pub fn interior(&self, shift: i64, lag: usize) -> &DMatrix<f64> {
        &self.interior[self.interior_index(shift, lag).expect("interior index in range")]
    }

    pub fn boundary(&self, shift: usize, row: i64, lag: i64) -> &DMatrix<f64> {
        &self.boundary[self.boundary_index(shift, row, lag).expect("boundary index in range")]
    }

    pub fn set_interior(&mut self, shift: i64, lag: usize, m: DMatrix<f64>) -> Result<()> {
        self.check_shape(&m)?;
        let i = self.interior_index(shift, lag)?;
        self.interior[i] = m;
        Ok(())
    }

    pub fn set_boundary(&mut self, shift: usize, row: i64, lag: i64, m: DMatrix<f64>) -> Result<()> {
        self.check_shape(&m)?;
        let i = self.boundary_index(shift, row, lag)?;
        self.boundary[i] = m;
        Ok(())
    }

    fn check_shape(&self, m: &DMatrix<f64>) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::MalformedScheme(format!(
                "expected {}x{} block, got {}x{}",
                self.dim,
                self.dim,
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::MalformedScheme("non-finite matrix entry".into()));
        }
        Ok(())
    }

    /// Replace the boundary closure by homogeneous Dirichlet rows (`U_j = g_j`).
    pub fn with_dirichlet(mut self) -> Self {
        for b in &mut self.boundary {
            b.fill(0.0);
        }
        self
    }

    /// Zeroth-order extrapolation `U_j^{n+1} = U_1^{n+1}` on every boundary row.
    pub fn with_extrapolation(mut self) -> Self {
        let id = DMatrix::identity(self.dim, self.dim);
        for b in &mut self.boundary {
            b.fill(0.0);
        }
        for row in self.boundary_rows() {
            self.set_boundary(0, row, -1, id.clone()).expect("shape matches");
        }
        self
    }

    /// `sum_shift kappa^shift A[shift, lag]`.
    pub fn symbol_block(&self, lag: usize, kappa: Complex64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for shift in self.shifts() {
            let a = self.interior(shift, lag);
            let w = kappa.powi(shift as i32);
            out.zip_apply(a, |o, x| *o += w * x);
        }
        out
    }

    /// `sum_lag z^{-lag-1} A[shift, lag]`, the time-transformed coefficient of one shift.
    pub fn time_transformed(&self, shift: i64, z: Complex64) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for lag in 0..=self.extra_levels {
            let w = z.powi(-(lag as i32) - 1);
            out.zip_apply(self.interior(shift, lag), |o, x| *o += w * x);
        }
        out
    }

    /// Sum of all interior coefficients; equals the identity for a consistent scheme.
    pub fn coefficient_sum(&self) -> DMatrix<f64> {
        self.interior.iter().fold(DMatrix::zeros(self.dim, self.dim), |acc, m| acc + m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub consistency_residual: f64,
    pub consistent: bool,
    /// Largest condition number of the leftmost time-transformed block on `|z| >= 1`.
    pub left_block_condition: f64,
    /// Largest condition number of the rightmost time-transformed block on `|z| >= 1`.
    pub right_block_condition: f64,
    pub noncharacteristic: bool,
}

const COND_LIMIT: f64 = 1e12;

/// Consistency (`sum A = I`) and invertibility of the extreme blocks on a sample of `|z| >= 1`.
pub fn validate_scheme(scheme: &SchemeDef) -> Result<ValidationReport> {
    let n = scheme.dim();
    let residual = (scheme.coefficient_sum() - DMatrix::identity(n, n)).abs().max();
    let r = scheme.left_width() as i64;
    let p = scheme.right_width() as i64;
    let mut left_cond: f64 = 1.0;
    let mut right_cond: f64 = 1.0;
    for &rad in &[1.0, 1.05, 1.25, 1.5, 2.0, 4.0, 16.0] {
        for k in 0..96 {
            let z = Complex64::from_polar(rad, 2.0 * std::f64::consts::PI * k as f64 / 96.0);
            left_cond = left_cond.max(condition_number(&resolvent_block(scheme, -r, z)));
            right_cond = right_cond.max(condition_number(&resolvent_block(scheme, p, z)));
        }
    }
    // The z -> infinity limit of the blocks is the lag-free coefficient minus identity at shift 0.
    left_cond = left_cond.max(condition_number(&resolvent_block(scheme, -r, Complex64::new(1e8, 0.0))));
    right_cond = right_cond.max(condition_number(&resolvent_block(scheme, p, Complex64::new(1e8, 0.0))));
    Ok(ValidationReport {
        consistency_residual: residual,
        consistent: residual <= 1e-12,
        left_block_condition: left_cond,
        right_block_condition: right_cond,
        noncharacteristic: left_cond <= COND_LIMIT && right_cond <= COND_LIMIT,
    })
}

/// `delta_{shift,0} I - sum_lag z^{-lag-1} A[shift, lag]`.
pub fn resolvent_block(scheme: &SchemeDef, shift: i64, z: Complex64) -> CMat {
    let mut out = -scheme.time_transformed(shift, z);
    if shift == 0 {
        for i in 0..scheme.dim() {
            out[(i, i)] += Complex64::new(1.0, 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_are_consistent_and_noncharacteristic() {
        for s in [
            fixtures::upwind(1.0, 0.5),
            fixtures::lax_friedrichs(1.0, 0.5),
            fixtures::lax_wendroff(1.0, 0.5),
            fixtures::leapfrog(1.0, 0.5),
        ] {
            let v = validate_scheme(&s).unwrap();
            assert!(v.consistent, "{v:?}");
            assert!(v.noncharacteristic, "{v:?}");
        }
    }

    #[test]
    fn vanishing_rightmost_block_is_characteristic() {
        let mut s = SchemeDef::zeros(1, 1, 1, 0, 0, 1.0).unwrap();
        s.set_interior(-1, 0, DMatrix::from_element(1, 1, 0.5)).unwrap();
        s.set_interior(0, 0, DMatrix::from_element(1, 1, 0.5)).unwrap();
        let v = validate_scheme(&s).unwrap();
        assert!(v.consistent);
        assert!(!v.noncharacteristic);
    }

    #[test]
    fn wrong_block_shape_is_rejected() {
        let mut s = SchemeDef::zeros(2, 1, 0, 0, 0, 1.0).unwrap();
        assert!(s.set_interior(0, 0, DMatrix::identity(3, 3)).is_err());
        assert!(s.set_interior(2, 0, DMatrix::identity(2, 2)).is_err());
    }
}
