//! Polyhedral sets, relations, loop-nest generation and schedule transforms.
//!
//! Everything is generic over the integer coefficient type (`i64` and `i128`
//! are the intended instantiations). The aliases below fix `i64`, which is
//! what the command line and the benchmark harness use.

pub mod codegen;
pub mod error;
pub mod iset;
pub mod num;
pub mod script;
pub mod transforms;

pub use error::{Error, Location, Result};
pub use num::Coeff;

pub type Set = iset::USet<i64>;
pub type Map = iset::UMap<i64>;
pub type BasicSet = iset::BasicSet<i64>;
pub type BasicMap = iset::BasicMap<i64>;
pub type Expr = iset::AffExpr<i64>;

pub type WideSet = iset::USet<i128>;
pub type WideMap = iset::UMap<i128>;

pub type Ast = codegen::LoopAst<i64>;
pub type Nest = codegen::LoopNest<i64>;
