pub mod chains;
pub mod cones;
pub mod error;
pub mod flatnorm;
pub mod foundation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod mass;
pub mod optimize;
pub mod slicing;

pub use error::{Error, Result};
