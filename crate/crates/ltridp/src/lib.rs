//! Texture classification with the local tri-directional pattern: image
//! decoding and preprocessing, the LTriDP descriptor with its magnitude
//! companion, from-scratch SVM solvers and an evaluation harness.

pub mod descriptor;
mod error;
pub mod eval;
pub mod imaging;
pub mod pipeline;
pub mod preprocess;
pub mod svm;

pub use error::{Error, Result};
