//! Heat invariants and spectral asymptotics of the perturbed harmonic oscillator
//! `H = -d²/dx² + x² + q(x)` with compactly supported smooth `q`.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffpoly`]: exact differential polynomials and the local heat invariants `a_j[v]`.
//! - [`jet`] / [`potential`]: truncated Taylor arithmetic and bump-type perturbations.
//! - [`quadrature`] / [`coeffs`]: integrated invariants `I_j` and the coefficients `b_j`.
//! - [`series`]: half-power series, reversion `b -> c` and the exponentiated `d_j(s)`.
//! - [`spectra`]: Hermite–Galerkin eigenvalues and an independent shooting solver.
//! - [`zeta`]: ζ, Γ, `Z₀(s) = (1 - 2^{-s}) ζ(s)` and odd tails.
//! - [`traces`]: residual fits, heat-trace comparison and regularized trace identities.

pub mod coeffs;
pub mod diffpoly;
pub mod error;
pub mod jet;
pub mod potential;
pub mod quadrature;
pub mod series;
pub mod spectra;
pub mod traces;
pub mod zeta;

pub use error::{Error, Result};
