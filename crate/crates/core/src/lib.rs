//! Nonlinear dispersive dynamics as a flow on free solutions.
//!
//! A solution `u` of `Lu + N(u) = 0` is tracked through `Theta_t u`, the free
//! solution sharing its Cauchy data at time `t`. In those coordinates the
//! dynamics is `d(Theta_t u)/dt + V_t(Theta_t u) = 0` for the Lagrange-Duhamel
//! vector field `V_t`. Functionals of the state are transported between times
//! by the time-ordered exponential `U_{t1}^{t2}` of the first-order operators
//! `V_t.`, and majorant series certify how long that transport converges.
//!
//! Modules, bottom-up:
//!
//! - [`series`]: one-variable majorant calculus and holomorphic flows.
//! - [`multilinear`]: symmetric tensors, truncated formal series, tensor norms.
//! - [`propagator`]: exact spectral propagators on a periodic 1-D grid.
//! - [`duhamel`]: `Theta_t`, `V_t`, the reference solver and its diagnostics.
//! - [`chrono`]: `V_t.` on functionals, `U_{t1}^{t2}`, invariance and certificates.
//! - [`trees`]: Feynman-tree expansion of `U_{t1}^{t2} f` for linear `f`.

pub mod chrono;
pub mod duhamel;
pub mod error;
pub mod multilinear;
pub mod propagator;
pub mod quadrature;
pub mod selftest;
pub mod series;
pub mod trees;

pub use error::{Error, Result};
