mod halfspace;
mod lipschitz;
mod subdivision;

pub(crate) use lipschitz::pl_pieces;

pub use halfspace::{check_level, restrict_complement, restrict_halfspace, slice};
pub use lipschitz::{
    exceptional_scan, pl_approx, restrict_lipschitz, LipschitzFn, PiecewiseLinear, RestrictOptions, RestrictionReport, ScanReport, ScanRow,
    StageReport,
};
pub use subdivision::{children, fullness_floor, standard_subdivision, subdivision_tree, SubCell};
