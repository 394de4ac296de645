//! Effective-mass renormalization coefficients of the spinless
//! Pauli-Fierz model to second order in the fine structure constant.
//!
//! `m / m_eff = 1 - alpha a1(lambda, kappa) - alpha^2 a2(lambda, kappa) + O(alpha^3)`
//! with `a1` in closed form and `a2` a sum of six polar integrals `b1..b6`
//! (equivalently, a six-dimensional momentum integral). The crate evaluates
//! both, sweeps the ultraviolet cutoff and extracts the large-cutoff growth
//! of `a2`, which is `sqrt(lambda)`.

pub mod asymptotics;
pub mod error;
pub mod integrands;
pub mod kernels;
pub mod quadrature;

pub use error::{Error, Result};
pub use integrands::TermId;
pub use kernels::CutoffWindow;
pub use quadrature::{IntegralResult, QuadratureSpec};
