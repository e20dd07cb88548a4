//! Numerical laboratory for finite-time blow-up of the superconformal semilinear wave
//! equation `u_tt = Δu + |u|^{p-1} u`.
//!
//! The crate simulates radial blow-up in physical variables, transforms solutions into
//! self-similar variables `y = x/(T-t)`, `s = -log(T-t)`, evaluates the weighted energy and
//! Lyapunov functionals on the unit ball, and verifies the identities, dissipation laws and
//! monotonicity statements that govern the blow-up rate.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod model;
pub mod numerics;
pub mod ode;
pub mod quadrature;
pub mod similarity;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use model::{kappa, kappa_of_p, Exponents, FunctionalSeries, PhysicalState, RadialGrid, TailMeta};
