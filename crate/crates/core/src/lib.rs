//! Stabilizer-free weak Galerkin finite elements for the stationary Stokes
//! problem on triangulations of the unit square.

pub mod analysis;
pub mod dense;
pub mod error;
pub mod mesh;
pub mod polyquad;
pub mod problem;
pub mod scalar;
pub mod sparse;
pub mod study;
pub mod system;
pub mod verify;
pub mod weakops;

pub use error::{Error, Result};
pub use scalar::{Point, Scalar};

pub type Mesh = mesh::Mesh<f64>;
pub type Discretization = system::Discretization<f64>;
pub type SaddleSystem = system::SaddleSystem<f64>;
pub type Solution = system::Solution<f64>;
pub type ErrorReport = analysis::ErrorReport<f64>;
pub type InfSup = analysis::InfSup<f64>;
