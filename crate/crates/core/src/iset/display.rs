//! Text rendering of expressions, constraints and whole sets/maps.
//!
//! Sets and maps print in the same syntax the script parser reads, so
//! `parse(print(x))` reproduces the canonical form of `x`.

use std::fmt;

use crate::iset::aff::{AffExpr, Var};
use crate::iset::basic::{BasicMap, BasicSet};
use crate::iset::constraint::{Constraint, ConstraintKind};
use crate::iset::union::{UMap, USet};
use crate::num::Coeff;

fn push_term<C: Coeff>(out: &mut String, c: C, name: &str, first: bool) {
    let neg = c < C::zero();
    let mag = if neg { C::zero() - c } else { c };
    if first {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    if mag == C::one() {
        out.push_str(name);
    } else {
        out.push_str(&format!("{mag} * {name}"));
    }
}

/// Renders `e` with positive terms first, then negative terms, then the
/// constant, e.g. `n - c0 - 1`.
pub fn render_expr<C: Coeff>(e: &AffExpr<C>, name: &dyn Fn(Var) -> String) -> String {
    let mut out = String::new();
    let mut first = true;
    let pos = e.terms().filter(|(_, c)| *c > C::zero());
    let neg = e.terms().filter(|(_, c)| *c < C::zero());
    for (v, c) in pos.chain(neg) {
        push_term(&mut out, c, &name(v), first);
        first = false;
    }
    let k = e.constant();
    if first {
        out.push_str(&k.to_string());
    } else if k > C::zero() {
        out.push_str(&format!(" + {k}"));
    } else if k < C::zero() {
        out.push_str(&format!(" - {}", C::zero() - k));
    }
    out
}

/// Renders `e >= 0` / `e = 0` as `lhs OP rhs` with both sides free of
/// negative coefficients.
pub fn render_constraint<C: Coeff>(
    c: &Constraint<C>,
    name: &dyn Fn(Var) -> String,
    eq_token: &str,
) -> String {
    let mut lhs = AffExpr::<C>::zero();
    let mut rhs = AffExpr::<C>::zero();
    for (v, k) in c.expr.terms() {
        if k > C::zero() {
            let _ = lhs.add_term(v, k);
        } else {
            let _ = rhs.add_term(v, C::zero() - k);
        }
    }
    let k = c.expr.constant();
    if k > C::zero() {
        lhs.set_constant(k);
    } else if k < C::zero() {
        let _ = rhs.add_constant(C::zero() - k);
    }
    let op = match c.kind {
        ConstraintKind::EqZero => eq_token,
        ConstraintKind::GeqZero => ">=",
    };
    format!("{} {op} {}", render_expr(&lhs, name), render_expr(&rhs, name))
}

fn params_prefix(f: &mut fmt::Formatter<'_>, params: &[String]) -> fmt::Result {
    if !params.is_empty() {
        write!(f, "[{}] -> ", params.join(", "))?;
    }
    Ok(())
}

fn tuple(name: &Option<String>, dims: &[String]) -> String {
    format!("{}[{}]", name.as_deref().unwrap_or(""), dims.join(", "))
}

fn body<C: Coeff>(
    f: &mut fmt::Formatter<'_>,
    exists: &[String],
    constraints: &[Constraint<C>],
    name: &dyn Fn(Var) -> String,
) -> fmt::Result {
    if constraints.is_empty() {
        return Ok(());
    }
    write!(f, " : ")?;
    if !exists.is_empty() {
        write!(f, "exists {} : ", exists.join(", "))?;
    }
    let parts: Vec<String> = constraints
        .iter()
        .map(|c| render_constraint(c, name, "="))
        .collect();
    write!(f, "{}", parts.join(" and "))
}

fn set_piece<C: Coeff>(f: &mut fmt::Formatter<'_>, s: &BasicSet<C>) -> fmt::Result {
    write!(f, "{}", tuple(&s.space.tuple.name, &s.space.tuple.dims))?;
    let name = |v: Var| match v {
        Var::Dim(d) => s.space.tuple.dims[d].clone(),
        Var::Param(p) => s.space.params[p].clone(),
        Var::Exists(e) => s.exists[e].clone(),
    };
    body(f, &s.exists, &s.constraints, &name)
}

fn map_piece<C: Coeff>(f: &mut fmt::Formatter<'_>, m: &BasicMap<C>) -> fmt::Result {
    write!(
        f,
        "{} -> {}",
        tuple(&m.space.input.name, &m.space.input.dims),
        tuple(&m.space.output.name, &m.space.output.dims)
    )?;
    let name = |v: Var| match v {
        Var::Dim(d) => m.space.dim_name(d).to_string(),
        Var::Param(p) => m.space.params[p].clone(),
        Var::Exists(e) => m.exists[e].clone(),
    };
    body(f, &m.exists, &m.constraints, &name)
}

impl<C: Coeff> fmt::Display for BasicSet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        params_prefix(f, &self.space.params)?;
        write!(f, "{{ ")?;
        set_piece(f, self)?;
        write!(f, " }}")
    }
}

impl<C: Coeff> fmt::Display for BasicMap<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        params_prefix(f, &self.space.params)?;
        write!(f, "{{ ")?;
        map_piece(f, self)?;
        write!(f, " }}")
    }
}

impl<C: Coeff> fmt::Display for USet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        params_prefix(f, self.params())?;
        write!(f, "{{ ")?;
        for (i, p) in self.pieces().iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            set_piece(f, p)?;
        }
        write!(f, " }}")
    }
}

impl<C: Coeff> fmt::Display for UMap<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        params_prefix(f, self.params())?;
        write!(f, "{{ ")?;
        for (i, p) in self.pieces().iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            map_piece(f, p)?;
        }
        write!(f, " }}")
    }
}
