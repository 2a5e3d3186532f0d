//! Encoding classical messages into quantum systems with thermal resources.

pub mod discriminate;
pub mod error;
pub mod experiment;
pub mod infotherm;
pub mod protocol;
pub mod qmatrix;
pub mod ranklaws;
pub mod seeds;
pub mod thermal;

pub use error::{Error, Result};
