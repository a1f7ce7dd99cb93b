//! Memory-bandwidth benchmarks built from pattern specifications.
//!
//! A pattern directory holds a `kernel.spec` (data spaces, memory mappings
//! and statement macros) and three schedules. [`generate`] turns the
//! schedules into C fragments, [`driver`] splices them into an OpenMP
//! template and compiles it, [`harness`] runs the result, and [`report`]
//! writes the records out.

pub mod driver;
pub mod error;
pub mod generate;
pub mod harness;
pub mod machine;
pub mod pattern;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
