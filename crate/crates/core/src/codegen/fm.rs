//! Rational Fourier–Motzkin elimination over integer-tightened constraints.

use crate::error::Result;
use crate::iset::{simplify, AffExpr, Constraint, Var};
use crate::num::{self, Coeff};

use super::bound::BoundExpr;

/// Constraint count past which [`implies`] gives up and answers `false`.
const IMPLIES_CAP: usize = 2000;

fn combine<C: Coeff>(a: &AffExpr<C>, ka: C, b: &AffExpr<C>, kb: C) -> Result<AffExpr<C>> {
    a.scaled(ka)?.plus(&b.scaled(kb)?)
}

/// Projects `v` out of `cs`. Returns `None` when the result is infeasible.
///
/// A unit-coefficient equality on `v` is substituted exactly. Otherwise a
/// non-unit equality is used to cancel `v` everywhere else, and failing that
/// every lower/upper inequality pair is combined.
pub fn eliminate<C: Coeff>(cs: &[Constraint<C>], v: Var) -> Result<Option<Vec<Constraint<C>>>> {
    let (with, mut out): (Vec<_>, Vec<_>) = cs.iter().cloned().partition(|c| c.expr.contains(v));
    if with.is_empty() {
        return Ok(simplify(&out));
    }

    let unit = with.iter().position(|c| {
        let a = c.coeff(v);
        c.is_eq() && (a == C::one() || a == -C::one())
    });
    let eq = unit.or_else(|| with.iter().position(|c| c.is_eq()));
    if let Some(pos) = eq {
        let e = &with[pos].expr;
        let a = e.coeff(v);
        if a.abs() == C::one() {
            // v = -a * (e - a*v)
            let value = e.without(v).scaled(-a)?;
            for (i, c) in with.iter().enumerate() {
                if i != pos {
                    out.push(c.substitute(v, &value)?);
                }
            }
        } else {
            for (i, c) in with.iter().enumerate() {
                if i == pos {
                    continue;
                }
                let b = c.coeff(v);
                // |a| * c - sign(a) * b * e cancels v and keeps the direction of c
                let expr = combine(&c.expr, a.abs(), e, num::neg(num::mul(a.signum(), b)?)?)?;
                out.push(Constraint { kind: c.kind, expr });
            }
        }
        return Ok(simplify(&out));
    }

    let (lower, upper): (Vec<_>, Vec<_>) = with.iter().partition(|c| c.coeff(v) > C::zero());
    for l in &lower {
        let a = l.coeff(v);
        for u in &upper {
            let b = -u.coeff(v);
            out.push(Constraint::geq(combine(&l.expr, b, &u.expr, a)?));
        }
    }
    Ok(simplify(&out))
}

/// Eliminates every `Dim(j)` with `j > k`, innermost first.
pub fn project_onto<C: Coeff>(cs: &[Constraint<C>], k: usize) -> Result<Option<Vec<Constraint<C>>>> {
    let mut cur = match simplify(cs) {
        Some(c) => c,
        None => return Ok(None),
    };
    loop {
        let inner = cur
            .iter()
            .filter_map(|c| c.innermost_dim())
            .filter(|&d| d > k)
            .max();
        let Some(d) = inner else { return Ok(Some(cur)) };
        match eliminate(&cur, Var::Dim(d))? {
            Some(next) => cur = next,
            None => return Ok(None),
        }
    }
}

/// Lower and upper bounds on `Dim(k)` from the constraints whose innermost
/// dimension is `k`. An equality contributes to both sides.
pub fn fm_bounds<C: Coeff>(cs: &[Constraint<C>], k: usize) -> Result<(Vec<BoundExpr<C>>, Vec<BoundExpr<C>>)> {
    let v = Var::Dim(k);
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for c in cs.iter().filter(|c| c.innermost_dim() == Some(k)) {
        let a = c.coeff(v);
        let rest = c.expr.without(v);
        if c.is_eq() {
            let (a, rest) = if a < C::zero() { (-a, rest.negated()?) } else { (a, rest) };
            let num = rest.negated()?;
            lowers.push(BoundExpr::ceil(num.clone(), a)?);
            uppers.push(BoundExpr::floor(num, a)?);
        } else if a > C::zero() {
            lowers.push(BoundExpr::ceil(rest.negated()?, a)?);
        } else {
            uppers.push(BoundExpr::floor(rest, -a)?);
        }
    }
    for list in [&mut lowers, &mut uppers] {
        list.sort_by_key(|b| b.sort_key());
        list.dedup();
    }
    Ok((lowers, uppers))
}

fn all_vars<C: Coeff>(cs: &[Constraint<C>]) -> Vec<Var> {
    let mut vs: Vec<Var> = cs.iter().flat_map(|c| c.expr.terms().map(|(v, _)| v)).collect();
    vs.sort();
    vs.dedup();
    vs
}

/// `true` when the constraints have no rational solution. `false` may also
/// mean the elimination grew past its size cap.
pub fn infeasible<C: Coeff>(cs: &[Constraint<C>]) -> bool {
    let Some(mut cur) = simplify(cs) else { return true };
    while let Some(&v) = all_vars(&cur).last() {
        match eliminate(&cur, v) {
            Ok(Some(next)) if next.len() <= IMPLIES_CAP => cur = next,
            Ok(Some(_)) | Err(_) => return false,
            Ok(None) => return true,
        }
    }
    false
}

/// Whether every integer point satisfying `premises` satisfies `c`.
///
/// Sound but incomplete: a `false` answer does not prove the opposite.
pub fn implies<C: Coeff>(premises: &[Constraint<C>], c: &Constraint<C>) -> bool {
    if premises.contains(c) {
        return true;
    }
    let Ok(negs) = c.as_inequalities() else { return false };
    negs.iter().all(|ineq| {
        let Ok(neg) = ineq.negated_inequality() else { return false };
        let mut sys = premises.to_vec();
        sys.push(neg);
        infeasible(&sys)
    })
}
