//! Mass through per-plane volume densities, with a direct-definition oracle.

pub mod density;
pub mod direct;
mod eilenberg;
#[allow(clippy::module_inception)]
mod mass;

pub use density::{density, density_entry, DensityEntry, MassDensityCache, OptimizerReport, PlaneKey};
pub use direct::{mass_direct, DirectGrid};
pub use eilenberg::{eilenberg_ratio, EilenbergReport};
pub use mass::{
    chain_norms, full_simplex, fullness, mass, mass_breakdown, polytope_size, simple_mass, size, summand_mass, ChainNorms, FullSimplex,
};
