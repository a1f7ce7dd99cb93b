use crate::error::Result;
use crate::iset::{render_expr, AffExpr, Var};
use crate::num::{ceil_div, floor_div, gcd, Coeff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    None,
    FloorDiv,
    CeilDiv,
}

/// `numerator / denominator` rounded as stated. A denominator of 1 always has
/// `Rounding::None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundExpr<C> {
    pub numerator: AffExpr<C>,
    pub denominator: C,
    pub rounding: Rounding,
}

impl<C: Coeff> BoundExpr<C> {
    pub fn exact(e: AffExpr<C>) -> Self {
        Self {
            numerator: e,
            denominator: C::one(),
            rounding: Rounding::None,
        }
    }

    pub fn floor(num: AffExpr<C>, den: C) -> Result<Self> {
        Self::build(num, den, Rounding::FloorDiv)
    }

    pub fn ceil(num: AffExpr<C>, den: C) -> Result<Self> {
        Self::build(num, den, Rounding::CeilDiv)
    }

    fn build(num: AffExpr<C>, den: C, rounding: Rounding) -> Result<Self> {
        assert!(den > C::zero(), "bound denominator must be positive");
        let round = |k: C, d: C| match rounding {
            Rounding::CeilDiv => ceil_div(k, d),
            _ => floor_div(k, d),
        };
        if num.is_constant() {
            return Ok(Self::exact(AffExpr::constant_expr(round(num.constant(), den))));
        }
        // floor((g*a + k) / (g*d)) = floor((a + floor(k/g)) / d), same for ceil
        let g = gcd(num.coeff_gcd(), den);
        let (num, den) = if g > C::one() {
            let mut lin = num.without_constant().div_exact(g);
            lin.set_constant(round(num.constant(), g));
            (lin, den / g)
        } else {
            (num, den)
        };
        if den == C::one() {
            return Ok(Self::exact(num));
        }
        Ok(Self {
            numerator: num,
            denominator: den,
            rounding,
        })
    }

    pub fn eval(&self, lookup: impl FnMut(Var) -> Result<C>) -> Result<C> {
        let v = self.numerator.eval(lookup)?;
        Ok(match self.rounding {
            Rounding::None => v,
            Rounding::FloorDiv => floor_div(v, self.denominator),
            Rounding::CeilDiv => ceil_div(v, self.denominator),
        })
    }

    pub fn render(&self, name: &dyn Fn(Var) -> String) -> String {
        let num = render_expr(&self.numerator, name);
        match self.rounding {
            Rounding::None => num,
            Rounding::FloorDiv => format!("floord({num}, {})", self.denominator),
            Rounding::CeilDiv => format!("ceild({num}, {})", self.denominator),
        }
    }

    /// Orders simpler bounds first: fewer terms (the constant counts as one),
    /// then by a name-independent rendering.
    pub fn sort_key(&self) -> (usize, String) {
        let terms = self.numerator.num_terms() + usize::from(self.numerator.constant() != C::zero());
        let generic = |v: Var| match v {
            Var::Dim(d) => format!("c{d}"),
            Var::Param(p) => format!("p{p}"),
            Var::Exists(e) => format!("e{e}"),
        };
        (terms.max(1), self.render(&generic))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: Var) -> String {
        match v {
            Var::Param(0) => "n".into(),
            Var::Dim(d) => format!("c{d}"),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_divisions_fold_away() {
        // floor((32*c0 + 62) / 32) = c0 + 1
        let b = BoundExpr::<i64>::floor(AffExpr::from_terms([(Var::Dim(0), 32)], 62).unwrap(), 32).unwrap();
        assert_eq!(b.render(&names), "c0 + 1");
        let b = BoundExpr::<i64>::ceil(AffExpr::constant_expr(-30), 32).unwrap();
        assert_eq!(b.render(&names), "0");
    }

    #[test]
    fn common_factors_reduce() {
        let b = BoundExpr::<i64>::floor(AffExpr::from_terms([(Var::Param(0), 2)], 0).unwrap(), 64).unwrap();
        assert_eq!(b.render(&names), "floord(n, 32)");
    }

    #[test]
    fn rounding_matches_integer_semantics_for_negatives() {
        let b = BoundExpr::<i64>::floor(AffExpr::var(Var::Param(0)), 4).unwrap();
        let at = |n: i64| b.eval(|_| Ok(n)).unwrap();
        assert_eq!((at(-1), at(-4), at(-5), at(7)), (-1, -1, -2, 1));
        let c = BoundExpr::<i64>::ceil(AffExpr::var(Var::Param(0)), 4).unwrap();
        assert_eq!(c.eval(|_| Ok(-5)).unwrap(), -1);
    }
}
