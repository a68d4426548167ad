//! Dense 3rd-order tensor decompositions for muscle-synergy analysis.
//!
//! The crate covers non-negative PARAFAC and Tucker decompositions fitted by
//! alternating least squares, a constrained Tucker model that separates
//! shared from task-specific synergies, an NMF baseline, and the pipelines
//! that turn labelled EMG epochs into synergy reports.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod diagnostics;
pub mod error;
pub mod factorization;
pub mod io;
pub mod cli;
pub mod pipeline;
mod linalg;
pub mod tensor;

pub use error::{Error, Result};
