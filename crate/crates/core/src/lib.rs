//! Pseudo-spectral solver and verification harness for the Camassa–Holm
//! (LANS-α) equations with fractional Laplacian viscosity on a periodic box:
//!
//! ```text
//! v_t + u·∇v + v·∇uᵀ + ∇p = -ν (-Δ)^s v
//! u - α² Δu = v
//! div v = div u = 0
//! ```
//!
//! The momentum `v` is the prognostic variable; the filtered velocity `u` is
//! derived from it by a diagonal Helmholtz solve whenever it is needed.

pub mod checkpoint;
pub mod diagnostics;
pub mod error;
pub mod fractional;
pub mod grid;
pub mod integrate;
pub mod rhs;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};
pub use fractional::PhysParams;
pub use grid::{Grid, GridSpec, RealField, SpectralField};
pub use integrate::{IntegratorConfig, Scheme};
pub use rhs::SimState;
