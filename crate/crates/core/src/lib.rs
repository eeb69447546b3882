pub mod error;
pub mod experiments;
pub mod linalg;
pub mod noise;
pub mod propagate;
pub mod protocol;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::{Mat2, SymMat2};
