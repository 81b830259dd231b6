//! Pseudospectral solvers for the n-dimensional b-equation
//!
//! ```text
//! Ω_t + ∇_U Ω + (∇U)ᵀ Ω + (b − 1) div(U) Ω = 0,    Ω = A U
//! ```
//!
//! on periodic grids, with the inertia operator `A` a Fourier multiplier.
//! Two formulations are provided: the Eulerian velocity form
//! `u_t = −A⁻¹(∇_u(Au) + (∇u)ᵀAu + (b − 1) div(u) Au)` and the Lagrangian
//! spray system `φ_t = v, v_t = S_φ(v)` on flow maps.

pub mod diagnostics;
pub mod equation;
pub mod error;
pub mod flow;
pub mod grid;
pub mod integrate;
pub mod interp;
pub mod multipliers;
pub mod ops;
pub mod scenarios;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, ScalarField, SpectralField, VectorField};
pub use multipliers::{GridMultiplier, MultiplierSymbol};
