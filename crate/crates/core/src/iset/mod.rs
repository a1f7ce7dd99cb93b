//! Parameterized integer sets and relations.
//!
//! The supported fragment is conjunctions of affine constraints with integer
//! coefficients, unions of such conjunctions, and existential variables that
//! are defined by an equality with a unit coefficient (which is enough to
//! express rectangular tiling). Parameters stay symbolic until
//! [`enumerate`] binds them.

mod aff;
mod basic;
mod constraint;
mod display;
mod enumerate;
mod schedule;
mod space;
mod union;

pub use aff::{AffExpr, Var};
pub use basic::{BasicMap, BasicSet};
pub use constraint::{simplify, Constraint, ConstraintKind, Tightened};
pub use display::{render_constraint, render_expr};
pub use enumerate::{bindings, enumerate, enumerate_basic, enumerate_map, enumerate_pieces, Bindings, Point};
pub use schedule::{invert_piece, schedule_check, InverseTable};
pub use space::{union_params, MapSpace, SetSpace, Tuple};
pub use union::{UMap, USet};

pub(crate) use basic::falsum;
pub(crate) use space::fresh_name;

use crate::error::Result;
use crate::num::Coeff;

/// Pointwise intersection of two unions.
pub fn intersect<C: Coeff>(a: &USet<C>, b: &USet<C>) -> Result<USet<C>> {
    a.intersect(b)
}

/// The pairs of `m` whose input point lies in `s`.
pub fn restrict_domain<C: Coeff>(m: &UMap<C>, s: &USet<C>) -> Result<UMap<C>> {
    m.restrict_domain(s)
}
