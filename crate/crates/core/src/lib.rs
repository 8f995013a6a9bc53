//! Lifts of diffeomorphisms to vector-bundle automorphisms on concrete,
//! embedded bundle models, with numerical checks of the liftability
//! criteria and obstructions.

pub mod bundles;
pub mod cli;
pub mod error;
pub mod gluing;
pub mod lifts;
pub mod lattice;
pub mod manifolds;
pub mod numkernel;
pub mod obstruction;
pub mod tolerance;

pub use error::{Error, Result};
