pub mod budget;
pub mod certificate;
pub mod cli;
pub mod encodings;
pub mod error;
pub mod nnfact;
pub mod polyhedra;
pub mod ratlin;
pub mod udisj;

pub use error::{Error, Result};
