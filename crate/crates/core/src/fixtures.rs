//! Reference schemes for the scalar advection equation `u_t + a u_x = 0`.
//!
//! Each constructor takes the mesh ratio `lambda = dt/dx` and the velocity `a`;
//! the boundary closure defaults to homogeneous Dirichlet rows.

use nalgebra::DMatrix;

use crate::scheme::SchemeDef;

fn scalar(x: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, x)
}

/// First-order upwind for `a > 0`: `U_j^{n+1} = U_j - lambda a (U_j - U_{j-1})`.
pub fn upwind(lambda: f64, a: f64) -> SchemeDef {
    let la = lambda * a;
    let mut s = SchemeDef::zeros(1, 1, 0, 0, 0, lambda).expect("valid shape");
    s.set_interior(-1, 0, scalar(la)).unwrap();
    s.set_interior(0, 0, scalar(1.0 - la)).unwrap();
    s
}

pub fn lax_friedrichs(lambda: f64, a: f64) -> SchemeDef {
    let la = lambda * a;
    three_point(lambda, (1.0 + la) / 2.0, 0.0, (1.0 - la) / 2.0)
}

pub fn lax_wendroff(lambda: f64, a: f64) -> SchemeDef {
    let la = lambda * a;
    three_point(lambda, (la + la * la) / 2.0, 1.0 - la * la, (la * la - la) / 2.0)
}

/// Scalar one-step scheme `a_- T^{-1} + a_0 + a_+ T`.
pub fn three_point(lambda: f64, a_minus: f64, a_zero: f64, a_plus: f64) -> SchemeDef {
    let mut s = SchemeDef::zeros(1, 1, 1, 0, 0, lambda).expect("valid shape");
    s.set_interior(-1, 0, scalar(a_minus)).unwrap();
    s.set_interior(0, 0, scalar(a_zero)).unwrap();
    s.set_interior(1, 0, scalar(a_plus)).unwrap();
    s
}

/// Leap-frog: `U_j^{n+1} = U_j^{n-1} - lambda a (U_{j+1}^n - U_{j-1}^n)`.
pub fn leapfrog(lambda: f64, a: f64) -> SchemeDef {
    let la = lambda * a;
    let mut s = SchemeDef::zeros(1, 1, 1, 0, 1, lambda).expect("valid shape");
    s.set_interior(-1, 0, scalar(la)).unwrap();
    s.set_interior(1, 0, scalar(-la)).unwrap();
    s.set_interior(0, 1, scalar(1.0)).unwrap();
    s
}

/// `Q = I` for a system of dimension `dim`.
pub fn identity(dim: usize) -> SchemeDef {
    let mut s = SchemeDef::zeros(dim, 0, 0, 0, 0, 1.0).expect("valid shape");
    s.set_interior(0, 0, DMatrix::identity(dim, dim)).unwrap();
    s
}

/// `Q = T`, the exact shift one cell to the left.
pub fn pure_shift(dim: usize) -> SchemeDef {
    let mut s = SchemeDef::zeros(dim, 0, 1, 0, 0, 1.0).expect("valid shape");
    s.set_interior(1, 0, DMatrix::identity(dim, dim)).unwrap();
    s
}

/// Look up a fixture by name.
pub fn by_name(name: &str, lambda: f64, a: f64) -> Option<SchemeDef> {
    Some(match name {
        "upwind" => upwind(lambda, a),
        "lax-friedrichs" | "lxf" => lax_friedrichs(lambda, a),
        "lax-wendroff" | "lxw" => lax_wendroff(lambda, a),
        "leapfrog" | "leap-frog" => leapfrog(lambda, a),
        "identity" => identity(1),
        "shift" => pure_shift(1),
        _ => return None,
    })
}
