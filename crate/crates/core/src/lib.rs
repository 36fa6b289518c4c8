pub mod baselines;
pub mod bounds;
pub mod commands;
pub mod domains;
pub mod error;
pub mod eval;
pub mod fsc;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
