//! Transition densities for square-root diffusions driven by fractional
//! Brownian motion, computed through the Laplace transform of the associated
//! forward (Fokker-Planck) equation
//!
//! ```text
//! u_t = (a t^{2v−1} x u)_{xx} − ((b x + c) u)_x ,   0 < x < ∞ ,
//! ```
//!
//! whose transform ω(t,s) is known in closed form up to quadratures. The
//! crate evaluates ω, solves the boundary-flux integral equation, inverts
//! numerically (Talbot + Gaver-Stehfest), and ships three independent
//! ground-truth generators for validation: the v = 1/2 closed form, a
//! mass-conserving finite-difference solver, and a fractional Monte Carlo
//! simulator.

pub mod error;
pub mod special;
pub mod quad;
pub mod laplace;
pub mod invert;
pub mod solver;
pub mod cir;
pub mod oracles;
pub mod validate;

pub use error::{FpkError, Result};
pub use laplace::{FpkParams, InitialDistribution};
