//! Correlation kernels for determinantal point processes defined by products
//! of minors of block Toeplitz matrices.
//!
//! The pipeline goes: build a matrix-valued symbol out of elementary
//! Bernoulli/geometric transition factors ([`symbol`]), reorder factors with
//! the whirl/curl switching rules ([`switching`]), construct the two
//! Wiener-Hopf factorizations ([`wienerhopf`]), and evaluate finite and
//! infinite correlation kernels by contour integration ([`quadrature`],
//! [`kernels`]). Model presets, the tile dictionaries and the brute-force
//! enumeration oracle live in [`models`].

pub mod cmat;
pub mod error;
pub mod kernels;
pub mod models;
pub mod par;
pub mod quadrature;
pub mod switching;
pub mod symbol;
pub mod toeplitz;
pub mod wienerhopf;

pub use cmat::CMat;
pub use error::{Error, Result};
pub use symbol::{ElementaryFactor, FactorKind, Primitive, SymbolExpr};
