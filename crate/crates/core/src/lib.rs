pub mod crf;
pub mod data;
pub mod error;
pub mod model;
pub mod nn;
pub mod stats;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
