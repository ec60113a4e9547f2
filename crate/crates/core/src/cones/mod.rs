mod cone;
mod quantize;

pub use cone::{cone, cone_boundary_check, cone_mass_ratio, cone_polytope};
pub use quantize::{ball_facets, cone_quantize, quantize_zero_chain, BudgetItem, CoeffNet, ErrorBudget, Quantization, RADIUS_CANDIDATES};
