pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod integrability;
pub mod linalg;
pub mod operators;
pub mod ruelle;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
