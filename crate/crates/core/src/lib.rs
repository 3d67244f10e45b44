pub mod certify;
pub mod cli;
mod dd;
pub mod discrepancy;
pub mod error;
pub mod gabor;
pub mod geometry;
pub mod integrate;
pub mod lattice;
pub mod quadrature;
pub mod surd;

pub use error::{Error, Result};
