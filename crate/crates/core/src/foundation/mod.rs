//! Normed spaces, functionals and coefficient groups.

mod group;
mod norm;

pub use group::{CoefficientGroup, GroupElement, REAL_ZERO};
pub use norm::{Functional, NormSpec, NormedSpace, MAX_DIM};
