//! Symmetric multilinear algebra on a finite-dimensional state space.

pub mod dump;
mod functional;
pub mod index;
mod norm;
mod tensor;

pub use functional::{SymFunctional, DEFAULT_DEGREE_CAP};
pub use norm::{
    sampled_lower_bound, tensor_norm, tensor_norm_with_codomain, upper_bound, AmbientNorm,
    CoordinateBound, NormBounds, SamplingOptions, StandardNorm,
};
pub use tensor::{monomial_times_linear, polarize, SymTensor};
