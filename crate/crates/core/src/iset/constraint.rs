use crate::error::Result;
use crate::iset::aff::{AffExpr, Var};
use crate::num::{self, Coeff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    /// `expr = 0`
    EqZero,
    /// `expr >= 0`
    GeqZero,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint<C> {
    pub kind: ConstraintKind,
    pub expr: AffExpr<C>,
}

/// Result of normalizing one constraint in isolation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tightened<C> {
    /// Holds for every integer point.
    Trivial,
    /// Holds for no integer point.
    Infeasible,
    Constraint(Constraint<C>),
}

impl<C: Coeff> Constraint<C> {
    pub fn eq(expr: AffExpr<C>) -> Self {
        Self {
            kind: ConstraintKind::EqZero,
            expr,
        }
    }

    pub fn geq(expr: AffExpr<C>) -> Self {
        Self {
            kind: ConstraintKind::GeqZero,
            expr,
        }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: &AffExpr<C>, rhs: &AffExpr<C>) -> Result<Self> {
        Ok(Self::geq(rhs.minus(lhs)?))
    }

    pub fn is_eq(&self) -> bool {
        self.kind == ConstraintKind::EqZero
    }

    pub fn innermost_dim(&self) -> Option<usize> {
        self.expr.innermost_dim()
    }

    pub fn coeff(&self, v: Var) -> C {
        self.expr.coeff(v)
    }

    /// Integer tightening: divides by the coefficient gcd (flooring the
    /// constant of inequalities) and fixes the sign of equalities so the
    /// leading coefficient is positive.
    pub fn tighten(&self) -> Tightened<C> {
        if self.expr.is_constant() {
            let c = self.expr.constant();
            let holds = match self.kind {
                ConstraintKind::EqZero => c.is_zero(),
                ConstraintKind::GeqZero => c >= C::zero(),
            };
            return if holds {
                Tightened::Trivial
            } else {
                Tightened::Infeasible
            };
        }
        let g = self.expr.coeff_gcd();
        match self.kind {
            ConstraintKind::EqZero => {
                if !(self.expr.constant() % g).is_zero() {
                    return Tightened::Infeasible;
                }
                let mut e = self.expr.div_exact(g);
                let lead = e.terms().next().map(|(_, c)| c).unwrap_or_else(C::one);
                if lead < C::zero() {
                    // only fails on a MIN coefficient; keep the unflipped form then
                    if let Ok(n) = e.negated() {
                        e = n;
                    }
                }
                Tightened::Constraint(Constraint::eq(e))
            }
            ConstraintKind::GeqZero => {
                if g == C::one() {
                    return Tightened::Constraint(self.clone());
                }
                let constant = num::floor_div(self.expr.constant(), g);
                let mut e = self.expr.without_constant().div_exact(g);
                e.set_constant(constant);
                Tightened::Constraint(Constraint::geq(e))
            }
        }
    }

    /// For an inequality `e >= 0`, the integer complement `-e - 1 >= 0`.
    pub fn negated_inequality(&self) -> Result<Self> {
        debug_assert!(!self.is_eq());
        let mut e = self.expr.negated()?;
        e.add_constant(-C::one())?;
        Ok(Self::geq(e))
    }

    /// Splits an equality into two inequalities; inequalities are returned as is.
    pub fn as_inequalities(&self) -> Result<Vec<Self>> {
        Ok(match self.kind {
            ConstraintKind::GeqZero => vec![self.clone()],
            ConstraintKind::EqZero => vec![
                Self::geq(self.expr.clone()),
                Self::geq(self.expr.negated()?),
            ],
        })
    }

    pub fn substitute(&self, v: Var, value: &AffExpr<C>) -> Result<Self> {
        Ok(Self {
            kind: self.kind,
            expr: self.expr.substitute(v, value)?,
        })
    }

    pub fn map_vars(&self, f: impl FnMut(Var) -> Var) -> Result<Self> {
        Ok(Self {
            kind: self.kind,
            expr: self.expr.map_vars(f)?,
        })
    }

    pub fn holds(&self, lookup: impl FnMut(Var) -> Result<C>) -> Result<bool> {
        let v = self.expr.eval(lookup)?;
        Ok(match self.kind {
            ConstraintKind::EqZero => v.is_zero(),
            ConstraintKind::GeqZero => v >= C::zero(),
        })
    }

    pub fn cast<D: Coeff>(&self) -> Result<Constraint<D>> {
        Ok(Constraint {
            kind: self.kind,
            expr: self.expr.cast()?,
        })
    }
}

impl<C: Coeff> AffExpr<C> {
    pub(crate) fn without_constant(&self) -> Self {
        let mut e = self.clone();
        e.set_constant(C::zero());
        e
    }
}

/// Tightens every constraint, drops trivial ones and duplicates, and keeps only
/// the tightest of parallel inequalities. Returns `None` when infeasibility is
/// detected syntactically.
pub fn simplify<C: Coeff>(cs: &[Constraint<C>]) -> Option<Vec<Constraint<C>>> {
    use std::collections::BTreeMap;

    let mut eqs: Vec<Constraint<C>> = Vec::new();
    // linear part -> smallest constant
    let mut ineqs: BTreeMap<AffExpr<C>, C> = BTreeMap::new();
    for c in cs {
        match c.tighten() {
            Tightened::Trivial => {}
            Tightened::Infeasible => return None,
            Tightened::Constraint(t) => match t.kind {
                ConstraintKind::EqZero => eqs.push(t),
                ConstraintKind::GeqZero => {
                    let k = t.expr.constant();
                    let lin = t.expr.without_constant();
                    ineqs
                        .entry(lin)
                        .and_modify(|cur| {
                            if k < *cur {
                                *cur = k
                            }
                        })
                        .or_insert(k);
                }
            },
        }
    }
    // `e + a >= 0` together with `-e + b >= 0` is empty when a + b < 0.
    for (lin, k) in &ineqs {
        if let Ok(neg) = lin.negated() {
            if let Some(k2) = ineqs.get(&neg) {
                if let Ok(sum) = num::add(*k, *k2) {
                    if sum < C::zero() {
                        return None;
                    }
                }
            }
        }
    }
    let mut out: Vec<Constraint<C>> = eqs;
    out.extend(ineqs.into_iter().map(|(mut lin, k)| {
        lin.set_constant(k);
        Constraint::geq(lin)
    }));
    out.sort();
    out.dedup();
    Some(out)
}
