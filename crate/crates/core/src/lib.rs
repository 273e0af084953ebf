//! Determinantal representations of semi-hyperbolic polynomials.
//!
//! The crate builds self-adjoint linear matrix pencils whose determinant
//! reproduces a given homogeneous polynomial, and checks every structural
//! property such a representation is supposed to have.

pub mod cayley;
pub mod config;
pub mod construct;
pub mod error;
pub mod fixtures;
pub mod hyper;
pub mod linalg;
pub mod pencil;
pub mod poly;
pub mod report;
pub mod sos;
pub mod suite;
pub mod uniroots;

pub type C64 = num_complex::Complex64;

pub use config::Config;
pub use error::{Error, Result};
pub use linalg::CMat;
pub use pencil::Pencil;

pub use poly::{parse_poly, Polynomial};
pub use report::Report;

