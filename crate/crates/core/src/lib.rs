//! Stability analysis for fully discrete finite-difference schemes of hyperbolic
//! initial boundary value problems on the half line.
//!
//! Each capability has a runnable example; `cargo run --example <name>` lists them.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod report;
pub mod resolvent;
pub mod sbp;
pub mod sim;
pub mod wavepacket;
pub mod scheme;
pub mod symbol;

pub use error::{Error, Result};
pub use grid::{apply_op, discrete_derivative, DifferenceOp, GridSequence};
pub use scheme::{validate_scheme, SchemeDef};
