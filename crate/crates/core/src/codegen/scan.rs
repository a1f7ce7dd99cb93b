//! Recursive polyhedral scanning of one or more pieces in a shared time space.
//!
//! Level `k` handles time dimension `k`. Each piece keeps its full constraint
//! system; projections onto dimensions `0..=k` are recomputed per level so
//! substitutions made at outer levels are always reflected. A constraint is
//! re-checked as a guard at the first level where all its dimensions are
//! bound, unless the enclosing loop bounds and guards already imply it. That
//! makes the generated code exact on integer points regardless of how loose
//! the rational projections are.

use crate::error::{Error, Result};
use crate::iset::{simplify, AffExpr, Constraint, Var};
use crate::num::Coeff;

use super::ast::LoopAst;
use super::fm::{fm_bounds, implies, infeasible, project_onto};

#[derive(Debug, Clone)]
pub(crate) struct Piece<C> {
    pub cs: Vec<Constraint<C>>,
    pub name: String,
    pub args: Vec<AffExpr<C>>,
}

impl<C: Coeff> Piece<C> {
    /// Replaces `Dim(k)` by `value` everywhere. `None` if the piece becomes empty.
    fn substitute(&self, k: usize, value: &AffExpr<C>) -> Result<Option<Self>> {
        let v = Var::Dim(k);
        let cs: Vec<_> = self.cs.iter().map(|c| c.substitute(v, value)).collect::<Result<_>>()?;
        let Some(cs) = simplify(&cs) else { return Ok(None) };
        Ok(Some(Self {
            cs,
            name: self.name.clone(),
            args: self.args.iter().map(|a| a.substitute(v, value)).collect::<Result<_>>()?,
        }))
    }
}

pub(crate) struct Scanner {
    pub depth: usize,
    pub dim_names: Vec<String>,
}

/// A piece together with its projection onto the current level.
struct Active<C> {
    piece: Piece<C>,
    proj: Vec<Constraint<C>>,
}

fn level_constraints<C: Coeff>(proj: &[Constraint<C>], k: usize) -> Vec<Constraint<C>> {
    proj.iter().filter(|c| c.innermost_dim() == Some(k)).cloned().collect()
}

/// `ck = e` from a unit-coefficient equality whose innermost dimension is `k`.
fn definition<C: Coeff>(proj: &[Constraint<C>], k: usize) -> Result<Option<AffExpr<C>>> {
    let v = Var::Dim(k);
    for c in proj.iter().filter(|c| c.is_eq() && c.innermost_dim() == Some(k)) {
        let a = c.coeff(v);
        if a.abs() == C::one() {
            return Ok(Some(c.expr.without(v).scaled(-a)?));
        }
    }
    Ok(None)
}

fn guarded<C: Coeff>(constraints: Vec<Constraint<C>>, body: LoopAst<C>) -> LoopAst<C> {
    if constraints.is_empty() || body.is_empty() {
        body
    } else {
        LoopAst::Guard {
            constraints,
            body: Box::new(body),
        }
    }
}

fn seq<C: Coeff>(mut nodes: Vec<LoopAst<C>>) -> LoopAst<C> {
    nodes.retain(|n| !n.is_empty());
    if nodes.len() == 1 {
        nodes.pop().unwrap()
    } else {
        LoopAst::Seq(nodes)
    }
}

impl Scanner {
    pub fn scan<C: Coeff>(&self, k: usize, pieces: Vec<Piece<C>>, ctx: &[Constraint<C>]) -> Result<LoopAst<C>> {
        let pieces: Vec<Piece<C>> = pieces.into_iter().filter(|p| !infeasible(&p.cs)).collect();
        if pieces.is_empty() {
            return Ok(LoopAst::empty());
        }

        // constraints whose dimensions are all bound by now
        let mut pending: Vec<Vec<Constraint<C>>> = pieces
            .iter()
            .map(|p| {
                p.cs.iter()
                    .filter(|c| c.innermost_dim().is_none_or(|d| d < k))
                    .filter(|c| !implies(ctx, c))
                    .cloned()
                    .collect()
            })
            .collect();
        let common: Vec<Constraint<C>> = if pieces.len() == 1 {
            std::mem::take(&mut pending[0])
        } else {
            pending[0]
                .iter()
                .filter(|c| pending[1..].iter().all(|p| p.contains(c)))
                .cloned()
                .collect()
        };
        for p in pending.iter_mut() {
            p.retain(|c| !common.contains(c));
        }
        let mut ctx: Vec<Constraint<C>> = ctx.to_vec();
        ctx.extend(common.iter().cloned());

        let body = if k == self.depth {
            self.leaf(pieces, pending)?
        } else {
            self.level(k, pieces, &ctx)?
        };
        Ok(guarded(common, body))
    }

    fn leaf<C: Coeff>(&self, pieces: Vec<Piece<C>>, pending: Vec<Vec<Constraint<C>>>) -> Result<LoopAst<C>> {
        let unguarded = pending.iter().filter(|g| g.is_empty()).count();
        if pieces.len() > 1 && unguarded > 1 {
            return Err(Error::UnsupportedUnionShape(
                "several pieces map to the same time point".into(),
            ));
        }
        let calls = pieces
            .into_iter()
            .zip(pending)
            .map(|(p, g)| {
                guarded(
                    g,
                    LoopAst::StmtCall {
                        name: p.name,
                        args: p.args,
                    },
                )
            })
            .collect();
        Ok(seq(calls))
    }

    fn level<C: Coeff>(&self, k: usize, pieces: Vec<Piece<C>>, ctx: &[Constraint<C>]) -> Result<LoopAst<C>> {
        let mut active = Vec::new();
        for piece in pieces {
            if let Some(proj) = project_onto(&piece.cs, k)? {
                active.push(Active { piece, proj });
            }
        }
        if active.is_empty() {
            return Ok(LoopAst::empty());
        }

        let defs: Vec<Option<AffExpr<C>>> =
            active.iter().map(|a| definition(&a.proj, k)).collect::<Result<_>>()?;
        if defs.iter().all(Option::is_some) {
            let mut groups: Vec<(AffExpr<C>, Vec<Piece<C>>)> = Vec::new();
            for (a, d) in active.iter().zip(&defs) {
                let d = d.clone().unwrap();
                match groups.iter_mut().find(|(e, _)| *e == d) {
                    Some((_, g)) => g.push(a.piece.clone()),
                    None => groups.push((d, vec![a.piece.clone()])),
                }
            }
            if groups.len() == 1 || groups.iter().all(|(e, _)| e.is_constant()) {
                groups.sort_by_key(|(e, _)| e.constant());
                let mut nodes = Vec::new();
                for (e, group) in groups {
                    let mut subst = Vec::new();
                    for p in &group {
                        if let Some(q) = p.substitute(k, &e)? {
                            subst.push(q);
                        }
                    }
                    nodes.push(self.scan(k + 1, subst, ctx)?);
                }
                return Ok(seq(nodes));
            }
        }

        if active.len() == 1 {
            let a = active.pop().unwrap();
            let bounds = level_constraints(&a.proj, k);
            let (lower, upper) = fm_bounds(&bounds, k)?;
            if lower.is_empty() || upper.is_empty() {
                return Err(Error::UnboundedDimension(self.dim_names[k].clone()));
            }
            return self.emit_loop(k, lower, upper, bounds, vec![a.piece], ctx);
        }

        let hull = self.hull(k, &active, ctx)?;
        let (lower, upper) = fm_bounds(&hull, k)?;
        if !lower.is_empty() && !upper.is_empty() {
            let pieces = active.into_iter().map(|a| a.piece).collect();
            return self.emit_loop(k, lower, upper, hull, pieces, ctx);
        }

        // no common bounds: emit the pieces one after another if their ranges
        // on this dimension are ordered
        let order = self.ordering(k, &active, ctx).ok_or_else(|| {
            Error::UnsupportedUnionShape(format!(
                "pieces overlap on dimension `{}` without common bounds",
                self.dim_names[k]
            ))
        })?;
        let mut nodes = Vec::new();
        for i in order {
            nodes.push(self.scan(k, vec![active[i].piece.clone()], ctx)?);
        }
        Ok(seq(nodes))
    }

    fn emit_loop<C: Coeff>(
        &self,
        k: usize,
        lower: Vec<super::bound::BoundExpr<C>>,
        upper: Vec<super::bound::BoundExpr<C>>,
        bounds: Vec<Constraint<C>>,
        pieces: Vec<Piece<C>>,
        ctx: &[Constraint<C>],
    ) -> Result<LoopAst<C>> {
        let mut inner_ctx = ctx.to_vec();
        inner_ctx.extend(bounds);
        let body = self.scan(k + 1, pieces, &inner_ctx)?;
        if body.is_empty() {
            return Ok(body);
        }
        Ok(LoopAst::Loop {
            iter: format!("c{k}"),
            dim: k,
            lower,
            upper,
            body: Box::new(body),
        })
    }

    /// Level-`k` inequalities implied by every piece, without members implied
    /// by the rest.
    fn hull<C: Coeff>(&self, k: usize, active: &[Active<C>], ctx: &[Constraint<C>]) -> Result<Vec<Constraint<C>>> {
        let mut candidates: Vec<Constraint<C>> = Vec::new();
        for a in active {
            for c in level_constraints(&a.proj, k) {
                for ineq in c.as_inequalities()? {
                    if !candidates.contains(&ineq) {
                        candidates.push(ineq);
                    }
                }
            }
        }
        let mut hull: Vec<Constraint<C>> = candidates
            .into_iter()
            .filter(|c| active.iter().all(|a| implies(&a.proj, c)))
            .collect();
        hull.sort_by_key(|c| std::cmp::Reverse(c.expr.num_terms()));
        let mut i = 0;
        while i < hull.len() {
            let mut rest: Vec<Constraint<C>> = ctx.to_vec();
            rest.extend(hull.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()));
            if implies(&rest, &hull[i]) {
                hull.remove(i);
            } else {
                i += 1;
            }
        }
        hull.sort();
        Ok(hull)
    }

    /// An order of the pieces in which, for equal outer iterators, every
    /// earlier piece's values of dimension `k` are below every later one's.
    fn ordering<C: Coeff>(&self, k: usize, active: &[Active<C>], ctx: &[Constraint<C>]) -> Option<Vec<usize>> {
        let precedes = |p: &Active<C>, q: &Active<C>| -> bool {
            let mut sys: Vec<Constraint<C>> = ctx.to_vec();
            sys.extend(p.proj.iter().cloned());
            for c in &q.proj {
                match c.map_vars(|v| if v == Var::Dim(k) { Var::Dim(k + 1) } else { v }) {
                    Ok(c) => sys.push(c),
                    Err(_) => return false,
                }
            }
            let Ok(diff) = AffExpr::from_terms([(Var::Dim(k), C::one()), (Var::Dim(k + 1), -C::one())], C::zero())
            else {
                return false;
            };
            sys.push(Constraint::geq(diff));
            infeasible(&sys)
        };
        let mut left: Vec<usize> = (0..active.len()).collect();
        let mut order = Vec::new();
        while !left.is_empty() {
            let pos = left
                .iter()
                .position(|&i| left.iter().all(|&j| i == j || precedes(&active[i], &active[j])))?;
            order.push(left.remove(pos));
        }
        Some(order)
    }
}
