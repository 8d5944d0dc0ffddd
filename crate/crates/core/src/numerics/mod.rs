//! Shared numerical kernels: normal distribution functions, quadrature,
//! a backward Runge–Kutta integrator that handles state jumps at event
//! times, finite differences, time grids and reproducible random streams.

pub mod diff;
pub mod dist;
pub mod grid;
pub mod ode;
pub mod quad;
pub mod rng;

pub use diff::{central, central4, deriv4_on_grid, second};
pub use dist::{halfplane_band_prob, log_norm_cdf, norm_cdf, norm_pdf};
pub use grid::Grid;
pub use ode::{rk4_backward_with_jumps, JumpedPath};
pub use quad::{composite_simpson, integrate_adaptive};
pub use rng::RngStream;
