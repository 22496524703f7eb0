pub mod error;
pub mod linalg;

pub mod catalog;
pub mod crystal;
pub mod heat;
pub mod krawtchouk;
pub mod lattice;
pub mod spectrum;
pub mod strata;
pub mod trace;

pub use error::{Error, Result};
