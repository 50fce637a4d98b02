//! Finite-truncation numerics for unitary tensor categories, C*-algebra
//! objects over them and the algebras they realize.

pub mod algebra_object;
pub mod annulus;
pub mod coend_realization;
pub mod cstar;
pub mod error;
pub mod fixtures;
pub mod fusion_ring;
pub mod inclusion_analysis;
pub mod io;
pub mod linalg;
pub mod semicircular;
pub mod skeletal_cat;

pub use error::{Error, Result};
