//! Spectral numerics for the two-dimensional Boussinesq system linearized
//! (and fully nonlinear) around plane Poiseuille flow `U = (1 - y², 0)` in
//! the channel `T × (-1, 1)`, with Navier-slip walls for the velocity and
//! Dirichlet walls for the temperature.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod nonlinear;
pub mod operators;
mod par;
pub mod resolvent;
pub mod spectral;
pub mod threshold;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
