//! Planar FK percolation with its medial loop representation and parafermionic observables.

pub mod engines;
pub mod error;
pub mod experiments;
pub mod fk;
pub mod geometry;
pub mod loops;
pub mod parafermion;

pub use error::{Error, Result};
