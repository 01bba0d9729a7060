pub mod cli;
pub mod error;
pub mod generator;
pub mod lambda;
pub mod model;
pub mod quad;
pub mod recurrence;
pub mod simulate;
pub mod specfun;

pub use error::{Error, Result};
