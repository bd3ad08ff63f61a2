//! Variable-exponent Lebesgue (Nakano) spaces over finite atomic measure
//! spaces: modular and Luxemburg norm, lattice operations, density change,
//! refinement embeddings and their rigidity, exponent perturbation with
//! certified constants, and approximation schemes for the modular.

pub mod approximation;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod format;
pub mod io;
pub mod measure;
pub mod nakano;
pub mod perturbation;
pub mod report;
pub mod sampling;
pub mod suites;

pub use error::{Error, Result};
pub use measure::{AtomicMeasureSpace, SimpleFunction};
pub use nakano::NakanoSpace;
