pub mod cholesky;
pub mod error;
pub mod fem;
pub mod harness;
pub mod hybrid;
pub mod manufactured;
pub mod material;
pub mod mesh;
pub mod neural;
pub mod sparse;

pub use error::{Error, Result};
