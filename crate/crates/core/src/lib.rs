//! Surface saliency models, virtual range scanning and a quantitative
//! saliency benchmark (AUC, NSS, LCC after histogram matching).

pub mod bench;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod saliency;
pub mod scanner;
pub mod shapes;
pub mod warning;

pub use error::{Error, Result};
pub use warning::Warning;
