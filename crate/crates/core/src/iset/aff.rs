use std::collections::BTreeMap;

use crate::error::Result;
use crate::num::{self, Coeff};

/// A variable slot inside a constraint system.
///
/// `Dim` indexes the tuple dimensions of the owning object (for maps, the
/// input dimensions come first, followed by the output dimensions), `Param`
/// indexes the parameter list and `Exists` the existential variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Dim(usize),
    Param(usize),
    Exists(usize),
}

impl Var {
    pub fn dim(self) -> Option<usize> {
        match self {
            Var::Dim(d) => Some(d),
            _ => None,
        }
    }
}

/// An affine expression `sum(coeff * var) + constant` with exact coefficients.
///
/// Zero coefficients are never stored, so structural equality is equality of
/// canonical forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffExpr<C> {
    terms: BTreeMap<Var, C>,
    constant: C,
}

impl<C: Coeff> Default for AffExpr<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> AffExpr<C> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: C::zero(),
        }
    }

    pub fn constant_expr(c: C) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, C::one())
    }

    pub fn term(v: Var, c: C) -> Self {
        let mut e = Self::zero();
        if !c.is_zero() {
            e.terms.insert(v, c);
        }
        e
    }

    /// Builds an expression from `(var, coeff)` pairs, summing repeated vars.
    pub fn from_terms(terms: impl IntoIterator<Item = (Var, C)>, constant: C) -> Result<Self> {
        let mut e = Self::constant_expr(constant);
        for (v, c) in terms {
            e.add_term(v, c)?;
        }
        Ok(e)
    }

    pub fn constant(&self) -> C {
        self.constant
    }

    pub fn coeff(&self, v: Var) -> C {
        self.terms.get(&v).copied().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Var, C)> + '_ {
        self.terms.iter().map(|(v, c)| (*v, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.terms.contains_key(&v)
    }

    /// Highest dimension index with a nonzero coefficient.
    pub fn innermost_dim(&self) -> Option<usize> {
        self.terms.keys().filter_map(|v| v.dim()).max()
    }

    pub fn has_exists(&self) -> bool {
        self.terms.keys().any(|v| matches!(v, Var::Exists(_)))
    }

    pub fn add_term(&mut self, v: Var, c: C) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let cur = self.coeff(v);
        let next = num::add(cur, c)?;
        if next.is_zero() {
            self.terms.remove(&v);
        } else {
            self.terms.insert(v, next);
        }
        Ok(())
    }

    pub fn add_constant(&mut self, c: C) -> Result<()> {
        self.constant = num::add(self.constant, c)?;
        Ok(())
    }

    pub fn set_constant(&mut self, c: C) {
        self.constant = c;
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        let mut e = self.clone();
        for (v, c) in other.terms() {
            e.add_term(v, c)?;
        }
        e.add_constant(other.constant)?;
        Ok(e)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.negated()?)
    }

    pub fn scaled(&self, k: C) -> Result<Self> {
        if k.is_zero() {
            return Ok(Self::zero());
        }
        let mut terms = BTreeMap::new();
        for (v, c) in self.terms() {
            terms.insert(v, num::mul(c, k)?);
        }
        Ok(Self {
            terms,
            constant: num::mul(self.constant, k)?,
        })
    }

    pub fn negated(&self) -> Result<Self> {
        self.scaled(-C::one())
    }

    /// Replaces `v` by `value` everywhere.
    pub fn substitute(&self, v: Var, value: &Self) -> Result<Self> {
        let c = self.coeff(v);
        if c.is_zero() {
            return Ok(self.clone());
        }
        let mut rest = self.clone();
        rest.terms.remove(&v);
        rest.plus(&value.scaled(c)?)
    }

    /// Renames variables; terms that collide are summed.
    pub fn map_vars(&self, mut f: impl FnMut(Var) -> Var) -> Result<Self> {
        let mut e = Self::constant_expr(self.constant);
        for (v, c) in self.terms() {
            e.add_term(f(v), c)?;
        }
        Ok(e)
    }

    /// Evaluates with a total lookup; `None` from `lookup` is reported by the caller's closure.
    pub fn eval(&self, mut lookup: impl FnMut(Var) -> Result<C>) -> Result<C> {
        let mut acc = self.constant;
        for (v, c) in self.terms() {
            acc = num::add(acc, num::mul(c, lookup(v)?)?)?;
        }
        Ok(acc)
    }

    /// Gcd of the variable coefficients (zero for constant expressions).
    pub fn coeff_gcd(&self) -> C {
        self.terms.values().fold(C::zero(), |g, c| num::gcd(g, *c))
    }

    /// Divides every coefficient and the constant exactly by `k`.
    pub(crate) fn div_exact(&self, k: C) -> Self {
        Self {
            terms: self.terms.iter().map(|(v, c)| (*v, *c / k)).collect(),
            constant: self.constant / k,
        }
    }

    pub(crate) fn without(&self, v: Var) -> Self {
        let mut e = self.clone();
        e.terms.remove(&v);
        e
    }

    pub fn cast<D: Coeff>(&self) -> Result<AffExpr<D>> {
        let mut e = AffExpr::constant_expr(num::cast(self.constant)?);
        for (v, c) in self.terms() {
            e.add_term(v, num::cast(c)?)?;
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut e = AffExpr::<i64>::var(Var::Dim(0));
        e.add_term(Var::Dim(0), -1).unwrap();
        assert!(e.is_constant());
        assert_eq!(e, AffExpr::zero());
    }

    #[test]
    fn substitution_is_exact() {
        // 2*d0 + p0 with d0 := d1 - 3
        let e = AffExpr::<i64>::from_terms([(Var::Dim(0), 2), (Var::Param(0), 1)], 0).unwrap();
        let v = AffExpr::from_terms([(Var::Dim(1), 1)], -3).unwrap();
        let s = e.substitute(Var::Dim(0), &v).unwrap();
        assert_eq!(s.coeff(Var::Dim(1)), 2);
        assert_eq!(s.coeff(Var::Param(0)), 1);
        assert_eq!(s.constant(), -6);
        assert!(!s.contains(Var::Dim(0)));
    }

    #[test]
    fn scaling_overflow_is_an_error() {
        let e = AffExpr::<i32>::term(Var::Dim(0), i32::MAX / 2 + 1);
        assert!(e.scaled(2).is_err());
    }
}
