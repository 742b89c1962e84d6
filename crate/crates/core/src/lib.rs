pub mod error;
pub mod inequality;
pub mod operators;
pub mod textio;
pub mod tol;

pub use error::{Error, Result};
