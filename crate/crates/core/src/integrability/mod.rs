//! R-matrix parametrization, transfer matrices and local conserved charges.

pub mod charges;
pub mod rmatrix;
pub mod transfer;

pub use charges::*;
pub use rmatrix::*;
pub use transfer::*;
