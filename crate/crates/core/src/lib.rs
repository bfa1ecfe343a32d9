pub mod afem;
pub mod equilibration;
pub mod error;
pub mod estimators;
pub mod galerkin;
pub mod harness;
pub mod mesh;
pub mod quadrature;

pub use error::{Error, Result};
pub use mesh::Mesh;
