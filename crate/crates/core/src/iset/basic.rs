use crate::error::{Error, Result};
use crate::iset::aff::{AffExpr, Var};
use crate::iset::constraint::{simplify, Constraint};
use crate::iset::space::{union_params, MapSpace, SetSpace};
use crate::num::Coeff;

/// A conjunction of affine constraints over one tuple space, with optional
/// existentially quantified variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasicSet<C> {
    pub space: SetSpace,
    pub exists: Vec<String>,
    pub constraints: Vec<Constraint<C>>,
}

/// A relation between an input and an output tuple. Constraint dimensions
/// `0..n_in` are the inputs and `n_in..n_in + n_out` the outputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasicMap<C> {
    pub space: MapSpace,
    pub exists: Vec<String>,
    pub constraints: Vec<Constraint<C>>,
}

fn check_vars<C: Coeff>(
    cs: &[Constraint<C>],
    n_dims: usize,
    n_params: usize,
    n_exists: usize,
) -> Result<()> {
    for c in cs {
        for (v, _) in c.expr.terms() {
            let ok = match v {
                Var::Dim(d) => d < n_dims,
                Var::Param(p) => p < n_params,
                Var::Exists(e) => e < n_exists,
            };
            if !ok {
                return Err(Error::SpaceMismatch(format!(
                    "constraint references {v:?} outside its space"
                )));
            }
        }
    }
    Ok(())
}

/// The canonical always-false constraint `-1 >= 0`.
pub(crate) fn falsum<C: Coeff>() -> Constraint<C> {
    Constraint::geq(AffExpr::constant_expr(-C::one()))
}

pub(crate) fn is_falsum<C: Coeff>(cs: &[Constraint<C>]) -> bool {
    cs.len() == 1 && cs[0] == falsum()
}

/// Eliminates every existential through an equality with a unit coefficient on
/// it, then tightens. `Ok(None)` means the result is empty.
pub(crate) fn normalize_constraints<C: Coeff>(
    cs: &[Constraint<C>],
    exists: &[String],
) -> Result<Option<Vec<Constraint<C>>>> {
    let mut cs = cs.to_vec();
    loop {
        let present: Vec<usize> = (0..exists.len())
            .filter(|&e| cs.iter().any(|c| c.expr.contains(Var::Exists(e))))
            .collect();
        if present.is_empty() {
            break;
        }
        let pick = present.iter().find_map(|&e| {
            let v = Var::Exists(e);
            cs.iter().position(|c| {
                let a = c.coeff(v);
                c.is_eq() && (a == C::one() || a == -C::one())
            })
            .map(|pos| (v, pos))
        });
        let Some((v, pos)) = pick else {
            return Err(Error::NonEliminableExistential(
                exists[present[0]].clone(),
            ));
        };
        let eq = cs.remove(pos);
        // a*v + rest = 0 with a = ±1  =>  v = -a*rest
        let a = eq.coeff(v);
        let value = eq.expr.without(v).scaled(-a)?;
        cs = cs
            .iter()
            .map(|c| c.substitute(v, &value))
            .collect::<Result<_>>()?;
    }
    Ok(simplify(&cs))
}

/// Maps this object's parameter indices into a superset parameter list.
fn remap_params<C: Coeff>(
    cs: &[Constraint<C>],
    own: &[String],
    target: &[String],
) -> Result<Vec<Constraint<C>>> {
    let index: Vec<usize> = own
        .iter()
        .map(|p| {
            target.iter().position(|t| t == p).ok_or_else(|| {
                Error::SpaceMismatch(format!("parameter `{p}` missing from target list"))
            })
        })
        .collect::<Result<_>>()?;
    cs.iter()
        .map(|c| {
            c.map_vars(|v| match v {
                Var::Param(p) => Var::Param(index[p]),
                other => other,
            })
        })
        .collect()
}

fn shift_exists<C: Coeff>(cs: &[Constraint<C>], by: usize) -> Result<Vec<Constraint<C>>> {
    cs.iter()
        .map(|c| {
            c.map_vars(|v| match v {
                Var::Exists(e) => Var::Exists(e + by),
                other => other,
            })
        })
        .collect()
}

impl<C: Coeff> BasicSet<C> {
    pub fn new(space: SetSpace, exists: Vec<String>, constraints: Vec<Constraint<C>>) -> Result<Self> {
        check_vars(&constraints, space.tuple.arity(), space.params.len(), exists.len())?;
        Ok(Self {
            space,
            exists,
            constraints,
        })
    }

    pub fn universe(space: SetSpace) -> Self {
        Self {
            space,
            exists: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn empty(space: SetSpace) -> Self {
        Self {
            space,
            exists: Vec::new(),
            constraints: vec![falsum()],
        }
    }

    pub fn arity(&self) -> usize {
        self.space.tuple.arity()
    }

    pub fn params(&self) -> &[String] {
        &self.space.params
    }

    pub fn tuple_name(&self) -> Option<&str> {
        self.space.tuple.name.as_deref()
    }

    /// True when normalization has proven the set empty.
    pub fn is_marked_empty(&self) -> bool {
        is_falsum(&self.constraints)
    }

    /// Substitutes out all existentials and integer-tightens the constraints.
    /// The integer point set is unchanged.
    pub fn normalize(&self) -> Result<Self> {
        Ok(match normalize_constraints(&self.constraints, &self.exists)? {
            Some(cs) => Self {
                space: self.space.clone(),
                exists: Vec::new(),
                constraints: cs,
            },
            None => Self::empty(self.space.clone()),
        })
    }

    pub fn with_params(&self, params: &[String]) -> Result<Self> {
        if params == self.params() {
            return Ok(self.clone());
        }
        Ok(Self {
            space: SetSpace {
                params: params.to_vec(),
                tuple: self.space.tuple.clone(),
            },
            exists: self.exists.clone(),
            constraints: remap_params(&self.constraints, self.params(), params)?,
        })
    }

    /// Conjunction of two sets over the same tuple.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if !self.space.tuple.compatible(&other.space.tuple) {
            return Err(Error::SpaceMismatch(format!(
                "cannot intersect {} with {}",
                self.space.tuple.label(),
                other.space.tuple.label()
            )));
        }
        let params = union_params(self.params(), other.params());
        let a = self.with_params(&params)?;
        let b = other.with_params(&params)?;
        let mut constraints = a.constraints;
        constraints.extend(shift_exists(&b.constraints, a.exists.len())?);
        let mut exists = a.exists;
        exists.extend(b.exists);
        Ok(Self {
            space: a.space,
            exists,
            constraints,
        })
    }

    pub fn cast<D: Coeff>(&self) -> Result<BasicSet<D>> {
        Ok(BasicSet {
            space: self.space.clone(),
            exists: self.exists.clone(),
            constraints: self.constraints.iter().map(|c| c.cast()).collect::<Result<_>>()?,
        })
    }
}

impl<C: Coeff> BasicMap<C> {
    pub fn new(space: MapSpace, exists: Vec<String>, constraints: Vec<Constraint<C>>) -> Result<Self> {
        check_vars(
            &constraints,
            space.n_in() + space.n_out(),
            space.params.len(),
            exists.len(),
        )?;
        Ok(Self {
            space,
            exists,
            constraints,
        })
    }

    pub fn n_in(&self) -> usize {
        self.space.n_in()
    }

    pub fn n_out(&self) -> usize {
        self.space.n_out()
    }

    pub fn params(&self) -> &[String] {
        &self.space.params
    }

    pub fn is_marked_empty(&self) -> bool {
        is_falsum(&self.constraints)
    }

    pub fn normalize(&self) -> Result<Self> {
        Ok(match normalize_constraints(&self.constraints, &self.exists)? {
            Some(cs) => Self {
                space: self.space.clone(),
                exists: Vec::new(),
                constraints: cs,
            },
            None => Self {
                space: self.space.clone(),
                exists: Vec::new(),
                constraints: vec![falsum()],
            },
        })
    }

    pub fn with_params(&self, params: &[String]) -> Result<Self> {
        if params == self.params() {
            return Ok(self.clone());
        }
        Ok(Self {
            space: MapSpace {
                params: params.to_vec(),
                input: self.space.input.clone(),
                output: self.space.output.clone(),
            },
            exists: self.exists.clone(),
            constraints: remap_params(&self.constraints, self.params(), params)?,
        })
    }

    /// The relation viewed as a set over `[in..., out...]`.
    pub fn wrap(&self) -> BasicSet<C> {
        BasicSet {
            space: self.space.wrapped(),
            exists: self.exists.clone(),
            constraints: self.constraints.clone(),
        }
    }

    /// Keeps the pairs whose input lies in `domain`.
    pub fn restrict_domain(&self, domain: &BasicSet<C>) -> Result<Self> {
        if !self.space.input.compatible(&domain.space.tuple) {
            return Err(Error::SpaceMismatch(format!(
                "map input {} does not match set {}",
                self.space.input.label(),
                domain.space.tuple.label()
            )));
        }
        let params = union_params(self.params(), domain.params());
        let m = self.with_params(&params)?;
        let s = domain.with_params(&params)?;
        let mut constraints = m.constraints;
        // set dims coincide with the map's input dims (indices 0..n_in)
        constraints.extend(shift_exists(&s.constraints, m.exists.len())?);
        let mut exists = m.exists;
        exists.extend(s.exists);
        Ok(Self {
            space: m.space,
            exists,
            constraints,
        })
    }

    pub fn cast<D: Coeff>(&self) -> Result<BasicMap<D>> {
        Ok(BasicMap {
            space: self.space.clone(),
            exists: self.exists.clone(),
            constraints: self.constraints.iter().map(|c| c.cast()).collect::<Result<_>>()?,
        })
    }
}
