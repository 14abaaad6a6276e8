pub mod cli;
pub mod convexity;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod universal;
pub(crate) mod lp;

pub use error::{Error, Result};
