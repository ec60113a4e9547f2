//! Oriented polytopes and polyhedral chains.

mod chain;
pub mod io;
mod polytope;

pub use chain::{PolyChain, RawSummand, SimpleChain};

pub use polytope::OrientedPolytope;
