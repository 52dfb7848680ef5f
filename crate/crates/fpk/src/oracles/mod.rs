//! Independent ground-truth generators used to validate the Laplace-domain
//! pipeline: the v = 1/2 closed form, a method-of-characteristics ODE
//! integration of the transform equation, a mass-conserving finite-difference
//! solver, and a fractional Monte Carlo simulator.

mod characteristic;
mod fd;
mod feller;
mod fbm;
mod ks;

pub use characteristic::omega_characteristic;
pub use fd::{fd_pde_solve, FdDensity, FdSolverConfig};
pub use feller::{feller_v_half_cdf, feller_v_half_density, feller_v_half_law};
pub use fbm::{simulate_fbm_paths, FbmSimConfig, FgnGenerator, SimScheme};
pub use ks::ks_statistic;
