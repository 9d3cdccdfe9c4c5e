//! Versioned JSON representation of schemes.
//!
//! ```json
//! { "schema": "hypstab.scheme/1", "N": 1, "r": 1, "p": 0, "q": 0, "s": 0, "lambda": 1.0,
//!   "interior": [ { "ell": -1, "sigma": 0, "matrix": [[0.5]] } ],
//!   "boundary": [ { "ell": 0, "j": 0, "sigma": -1, "matrix": [[1.0]] } ] }
//! ```
//! Matrices are row-major nested arrays; omitted entries are zero.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::SchemeDef;

pub const SCHEME_SCHEMA: &str = "hypstab.scheme/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeFile {
    pub schema: String,
    #[serde(rename = "N")]
    pub dim: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    pub s: usize,
    pub lambda: f64,
    pub interior: Vec<InteriorEntry>,
    #[serde(default)]
    pub boundary: Vec<BoundaryEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteriorEntry {
    pub ell: i64,
    pub sigma: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub ell: usize,
    pub j: i64,
    pub sigma: i64,
    pub matrix: Vec<Vec<f64>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::MalformedScheme(format!("matrix must be {dim}x{dim}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl SchemeFile {
    pub fn from_scheme(s: &SchemeDef) -> Self {
        let mut interior = Vec::new();
        for ell in s.shifts() {
            for sigma in 0..=s.extra_levels() {
                let m = s.interior(ell, sigma);
                if m.iter().any(|&x| x != 0.0) {
                    interior.push(InteriorEntry { ell, sigma, matrix: to_rows(m) });
                }
            }
        }
        let mut boundary = Vec::new();
        for ell in 0..=s.boundary_width() {
            for j in s.boundary_rows() {
                for sigma in -1..=s.extra_levels() as i64 {
                    let m = s.boundary(ell, j, sigma);
                    if m.iter().any(|&x| x != 0.0) {
                        boundary.push(BoundaryEntry { ell, j, sigma, matrix: to_rows(m) });
                    }
                }
            }
        }
        Self {
            schema: SCHEME_SCHEMA.into(),
            dim: s.dim(),
            r: s.left_width(),
            p: s.right_width(),
            q: s.boundary_width(),
            s: s.extra_levels(),
            lambda: s.mesh_ratio(),
            interior,
            boundary,
        }
    }

    pub fn to_scheme(&self) -> Result<SchemeDef> {
        if self.schema != SCHEME_SCHEMA {
            return Err(Error::MalformedScheme(format!(
                "unsupported schema '{}', expected '{SCHEME_SCHEMA}'",
                self.schema
            )));
        }
        let mut s = SchemeDef::zeros(self.dim, self.r, self.p, self.q, self.s, self.lambda)?;
        for e in &self.interior {
            s.set_interior(e.ell, e.sigma, from_rows(&e.matrix, self.dim)?)?;
        }
        for e in &self.boundary {
            s.set_boundary(e.ell, e.j, e.sigma, from_rows(&e.matrix, self.dim)?)?;
        }
        Ok(s)
    }
}

pub fn scheme_to_json(s: &SchemeDef) -> String {
    serde_json::to_string_pretty(&SchemeFile::from_scheme(s)).expect("serialisable")
}

pub fn scheme_from_json(text: &str) -> Result<SchemeDef> {
    let f: SchemeFile = serde_json::from_str(text)?;
    f.to_scheme()
}

pub fn load_scheme(path: &Path) -> Result<SchemeDef> {
    scheme_from_json(&std::fs::read_to_string(path)?)
}
