//! Entanglement-assisted codes from erasure-correctable qubit subsets.

pub mod analysis;
pub mod codes;
pub mod error;
pub mod qla;
pub mod simulate;
pub mod stab;
pub mod structure;

pub use error::{Error, Result};
