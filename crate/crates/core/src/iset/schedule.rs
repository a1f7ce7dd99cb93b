use crate::error::{Error, Result};
use crate::iset::aff::{AffExpr, Var};
use crate::iset::basic::BasicMap;
use crate::iset::union::UMap;
use crate::num::Coeff;

/// For each map piece, every input dimension as an affine function of the
/// output dimensions (`Var::Dim(k)` = output `k`) and parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseTable<C> {
    pub pieces: Vec<Vec<AffExpr<C>>>,
}

/// Solves the equalities of one normalized piece for its input dimensions.
pub fn invert_piece<C: Coeff>(m: &BasicMap<C>) -> Result<Vec<AffExpr<C>>> {
    let m = if m.exists.is_empty() {
        m.clone()
    } else {
        m.normalize()?
    };
    let n_in = m.n_in();
    let mut eqs: Vec<AffExpr<C>> = m
        .constraints
        .iter()
        .filter(|c| c.is_eq())
        .map(|c| c.expr.clone())
        .collect();
    let mut solved: Vec<Option<AffExpr<C>>> = vec![None; n_in];

    loop {
        let pick = eqs.iter().enumerate().find_map(|(pos, e)| {
            (0..n_in)
                .filter(|&i| solved[i].is_none())
                .find(|&i| {
                    let a = e.coeff(Var::Dim(i));
                    a == C::one() || a == -C::one()
                })
                .map(|i| (pos, i))
        });
        let Some((pos, i)) = pick else { break };
        let eq = eqs.remove(pos);
        let v = Var::Dim(i);
        let a = eq.coeff(v);
        let value = eq.without(v).scaled(-a)?;
        for e in eqs.iter_mut() {
            *e = e.substitute(v, &value)?;
        }
        for s in solved.iter_mut().flatten() {
            *s = s.substitute(v, &value)?;
        }
        solved[i] = Some(value);
    }

    solved
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let name = || m.space.dim_name(i).to_string();
            let s = s.ok_or_else(|| Error::NotInvertibleAsSchedule(name()))?;
            if s.terms().any(|(v, _)| matches!(v, Var::Dim(d) if d < n_in)) {
                return Err(Error::NotInvertibleAsSchedule(name()));
            }
            s.map_vars(|v| match v {
                Var::Dim(d) => Var::Dim(d - n_in),
                other => other,
            })
        })
        .collect()
}

/// Checks that every piece determines its input tuple from its output tuple,
/// returning the inverse expressions.
pub fn schedule_check<C: Coeff>(m: &UMap<C>) -> Result<InverseTable<C>> {
    Ok(InverseTable {
        pieces: m.pieces().iter().map(invert_piece).collect::<Result<_>>()?,
    })
}
