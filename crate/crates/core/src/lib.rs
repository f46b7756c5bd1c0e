//! Isogeometric collocation solver for laminated composite plates.
//!
//! The pipeline models a simply supported cross-ply plate with a single
//! homogenized element through the thickness, solves the strong-form
//! elasticity equations collocated at Greville points, and reconstructs
//! continuous out-of-plane stresses by integrating the equilibrium
//! equations through the thickness. Accuracy is measured against the exact
//! layered-plate reference solution for the sinusoidal-load benchmark.

pub mod bench;
pub mod error;
pub mod linalg;
pub mod material;
pub mod pagano;
pub mod quadrature;
pub mod recovery;
pub mod solver;
pub mod spline;

pub use error::{Error, Result};
