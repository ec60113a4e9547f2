//! Flat-norm upper bounds over fillings supported on a simplicial complex.

mod complex;
mod embed;
mod solve;

pub use complex::{adapted_complex, build_complex, Incidence, SimplicialComplex, MAX_COMPLEX_DIM};
pub use embed::{embed_chain, ComplexChain, EmbedReport};
pub use solve::{
    flat_distance, flat_norm_upper, refine_sweep, FlatDistance, FlatNormCertificate, SolveMode, SweepPoint, INTEGER_NODE_LIMIT,
    MODULAR_MAX_M, MODULAR_MAX_SIMPLICES,
};
