//! Spectral analysis of random walks on Z_q^d.
//!
//! The walk X_{t+1} = X_t + V_t mod q (componentwise) has eigenvectors built
//! from roots of unity, and every eigenvalue is a character expectation of
//! the increment V. When the entries of V are exchangeable the walk lumps to
//! a chain on count vectors whose eigenvectors are multivariate Krawtchouk
//! polynomials.
//!
//! Numeric routines are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`. The torus, asymptotic and Monte
//! Carlo modules work in `f64` only.

pub mod asymptotics;
pub mod circulant;
pub mod product;
pub mod error;
pub mod grouped;
pub mod krawtchouk;
pub mod mc_oracle;
pub mod models;
pub mod scalar;
pub mod series;
pub mod torus;
pub mod zq_core;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type IncrementLaw1D64 = circulant::IncrementLaw1D<f64>;
pub type EigenTable1D64 = circulant::EigenTable1D<f64>;
pub type IncrementDist64 = product::IncrementDist<f64>;
pub type ProductSpectrum64 = product::ProductSpectrum<f64>;
pub type MvkTable64 = krawtchouk::MvkTable<f64>;
pub type GroupedChain64 = grouped::GroupedChain<f64>;
pub type HammingModel64 = grouped::HammingModel<f64>;
