//! Sharp Grünbaum-type bounds for the mass a barycentric hyperplane cut
//! leaves on one side, with numerical verification of each bound.

pub mod bodies;
pub mod cli;
pub mod concavity;
pub mod error;
pub mod gaussian;
pub mod measure1d;
pub mod quadrature;
pub mod report;
pub mod sconcave;
pub mod transport;

pub use error::{Error, Result};
