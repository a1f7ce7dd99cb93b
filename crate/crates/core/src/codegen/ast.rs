use crate::error::{Error, Result};
use crate::iset::{AffExpr, Bindings, Constraint, Var};
use crate::num::Coeff;

use super::bound::BoundExpr;

/// Generated loop tree. Expressions refer to enclosing loop iterators as
/// `Var::Dim(k)` (iterator `ck`) and to parameters as `Var::Param(p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopAst<C> {
    Loop {
        iter: String,
        dim: usize,
        /// Maximum of these.
        lower: Vec<BoundExpr<C>>,
        /// Minimum of these.
        upper: Vec<BoundExpr<C>>,
        body: Box<LoopAst<C>>,
    },
    StmtCall {
        name: String,
        args: Vec<AffExpr<C>>,
    },
    Seq(Vec<LoopAst<C>>),
    Guard {
        constraints: Vec<Constraint<C>>,
        body: Box<LoopAst<C>>,
    },
}

impl<C: Coeff> LoopAst<C> {
    pub fn empty() -> Self {
        LoopAst::Seq(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, LoopAst::Seq(v) if v.is_empty())
    }

    /// Nesting depth of loops along the deepest path.
    pub fn depth(&self) -> usize {
        match self {
            LoopAst::Loop { body, .. } => 1 + body.depth(),
            LoopAst::StmtCall { .. } => 0,
            LoopAst::Seq(v) => v.iter().map(|c| c.depth()).max().unwrap_or(0),
            LoopAst::Guard { body, .. } => body.depth(),
        }
    }

    /// Every loop in pre-order.
    pub fn loops(&self) -> Vec<&LoopAst<C>> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if matches!(n, LoopAst::Loop { .. }) {
                out.push(n);
            }
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a LoopAst<C>)) {
        f(self);
        match self {
            LoopAst::Loop { body, .. } | LoopAst::Guard { body, .. } => body.walk(f),
            LoopAst::Seq(v) => v.iter().for_each(|c| c.walk(f)),
            LoopAst::StmtCall { .. } => {}
        }
    }
}

/// A loop tree together with the parameter names its expressions index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNest<C> {
    pub params: Vec<String>,
    pub root: LoopAst<C>,
}

impl<C: Coeff> LoopNest<C> {
    pub fn name_of(&self, v: Var) -> String {
        match v {
            Var::Dim(d) => format!("c{d}"),
            Var::Param(p) => self.params[p].clone(),
            Var::Exists(e) => format!("e{e}"),
        }
    }

    /// Every statement the tree calls, with the number of arguments.
    pub fn statements(&self) -> std::collections::BTreeMap<String, usize> {
        let mut out = std::collections::BTreeMap::new();
        self.root.walk(&mut |n| {
            if let LoopAst::StmtCall { name, args } = n {
                out.insert(name.clone(), args.len());
            }
        });
        out
    }

    /// Interprets the tree, calling `visit(statement, args)` for every executed
    /// statement instance in program order.
    pub fn execute(&self, bindings: &Bindings<C>, mut visit: impl FnMut(&str, &[C])) -> Result<()> {
        let params: Vec<C> = self
            .params
            .iter()
            .map(|p| bindings.get(p).copied().ok_or_else(|| Error::UnboundParameter(p.clone())))
            .collect::<Result<_>>()?;
        let mut iters: Vec<Option<C>> = Vec::new();
        let mut args = Vec::new();
        run(&self.root, &params, &mut iters, &mut args, &mut visit)
    }

    /// Collects `(statement, args)` for every executed instance.
    pub fn trace(&self, bindings: &Bindings<C>) -> Result<Vec<(String, Vec<C>)>> {
        let mut out = Vec::new();
        self.execute(bindings, |s, a| out.push((s.to_string(), a.to_vec())))?;
        Ok(out)
    }
}

fn lookup<'a, C: Coeff>(params: &'a [C], iters: &'a [Option<C>]) -> impl Fn(Var) -> Result<C> + 'a {
    move |v| match v {
        Var::Param(p) => Ok(params[p]),
        Var::Dim(d) => iters
            .get(d)
            .copied()
            .flatten()
            .ok_or_else(|| Error::UnboundedDimension(format!("c{d}"))),
        Var::Exists(_) => Err(Error::NonEliminableExistential("in loop expression".into())),
    }
}

fn run<C: Coeff>(
    node: &LoopAst<C>,
    params: &[C],
    iters: &mut Vec<Option<C>>,
    args: &mut Vec<C>,
    visit: &mut dyn FnMut(&str, &[C]),
) -> Result<()> {
    match node {
        LoopAst::Seq(children) => {
            for c in children {
                run(c, params, iters, args, visit)?;
            }
        }
        LoopAst::Guard { constraints, body } => {
            {
                let env = lookup(params, iters);
                for c in constraints {
                    if !c.holds(&env)? {
                        return Ok(());
                    }
                }
            }
            run(body, params, iters, args, visit)?;
        }
        LoopAst::StmtCall { name, args: exprs } => {
            let env = lookup(params, iters);
            args.clear();
            for e in exprs {
                args.push(e.eval(&env)?);
            }
            visit(name, args);
        }
        LoopAst::Loop {
            dim,
            lower,
            upper,
            body,
            ..
        } => {
            let (lo, hi) = {
                let env = lookup(params, iters);
                let lo = lower.iter().map(|b| b.eval(&env)).try_fold(None, |acc: Option<C>, v| {
                    let v = v?;
                    Ok::<_, Error>(Some(acc.map_or(v, |a| a.max(v))))
                })?;
                let hi = upper.iter().map(|b| b.eval(&env)).try_fold(None, |acc: Option<C>, v| {
                    let v = v?;
                    Ok::<_, Error>(Some(acc.map_or(v, |a| a.min(v))))
                })?;
                match (lo, hi) {
                    (Some(l), Some(h)) => (l, h),
                    _ => return Err(Error::UnboundedDimension(format!("c{dim}"))),
                }
            };
            if iters.len() <= *dim {
                iters.resize(dim + 1, None);
            }
            let mut i = lo;
            while i <= hi {
                iters[*dim] = Some(i);
                run(body, params, iters, args, visit)?;
                i = i + C::one();
            }
            iters[*dim] = None;
        }
    }
    Ok(())
}
