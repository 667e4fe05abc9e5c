pub mod error;
pub mod forward_uq;
pub mod geometry;
pub mod assembly;
pub mod bayes;
pub mod mesh;
pub mod oracle;
pub mod potential;
pub mod qmc;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
