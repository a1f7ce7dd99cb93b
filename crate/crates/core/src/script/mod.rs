//! The set/relation script language.
//!
//! ```text
//! Domain := [n] -> { S[i, j] : 1 <= i <= n and 1 <= j <= n };
//! Swap   := [n] -> { S[i, j] -> [j, i] };
//! codegen(Swap * Domain);
//! ```
//!
//! Literals take an optional `[params] ->` prefix and a brace-enclosed list of
//! `;`-separated pieces. Constraints are chained comparisons joined by `and`,
//! optionally preceded by `exists v, ... :`. Tuple entries that reuse a name or
//! are expressions introduce a fresh dimension equal to that expression. `*`
//! intersects two sets or restricts a map's domain to a set. `#` starts a
//! comment.

mod lexer;
mod parser;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::iset::{UMap, USet};
use crate::num::Coeff;

use parser::Parser;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr<C> {
    Ref(String),
    Set(USet<C>),
    Map(UMap<C>),
    /// `lhs * rhs`
    Apply(Box<Expr<C>>, Box<Expr<C>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition<C> {
    pub name: String,
    pub expr: Expr<C>,
}

/// Definitions in source order followed by the single `codegen(...)` target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script<C> {
    pub definitions: Vec<Definition<C>>,
    pub codegen: Expr<C>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value<C> {
    Set(USet<C>),
    Map(UMap<C>),
}

impl<C: Coeff> Value<C> {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Set(_) => "set",
            Value::Map(_) => "map",
        }
    }
}

pub fn parse_script<C: Coeff>(text: &str) -> Result<Script<C>> {
    Parser::new(text)?.script()
}

/// Parses one set literal such as `[n] -> { S[i] : 0 <= i < n }`.
pub fn parse_set<C: Coeff>(text: &str) -> Result<USet<C>> {
    match Parser::new(text)?.standalone()? {
        Expr::Set(s) => Ok(s),
        other => Err(Error::UnsupportedOperands(format!(
            "expected a set literal, found {}",
            describe(&other)
        ))),
    }
}

/// Parses one map literal such as `{ S[i, j] -> [j, i] }`.
pub fn parse_map<C: Coeff>(text: &str) -> Result<UMap<C>> {
    match Parser::new(text)?.standalone()? {
        Expr::Map(m) => Ok(m),
        // an empty literal `{ }` is a set syntactically; accept it as an empty map
        Expr::Set(s) if s.pieces().is_empty() => Ok(UMap::empty(s.params().to_vec())),
        other => Err(Error::UnsupportedOperands(format!(
            "expected a map literal, found {}",
            describe(&other)
        ))),
    }
}

fn describe<C>(e: &Expr<C>) -> &'static str {
    match e {
        Expr::Ref(_) => "a name",
        Expr::Set(_) => "a set",
        Expr::Map(_) => "a map",
        Expr::Apply(..) => "an expression",
    }
}

/// `set * set` intersects; `map * set` restricts the map's domain.
pub fn apply<C: Coeff>(lhs: &Value<C>, rhs: &Value<C>) -> Result<Value<C>> {
    match (lhs, rhs) {
        (Value::Set(a), Value::Set(b)) => Ok(Value::Set(a.intersect(b)?)),
        (Value::Map(m), Value::Set(s)) => Ok(Value::Map(m.restrict_domain(s)?)),
        (a, b) => Err(Error::UnsupportedOperands(format!(
            "`{} * {}` is not supported",
            a.kind(),
            b.kind()
        ))),
    }
}

impl<C: Coeff> Script<C> {
    pub fn evaluate_expr(&self, e: &Expr<C>, env: &HashMap<String, Value<C>>) -> Result<Value<C>> {
        Ok(match e {
            Expr::Ref(n) => env
                .get(n)
                .cloned()
                .ok_or_else(|| Error::UnsupportedOperands(format!("`{n}` is not defined")))?,
            Expr::Set(s) => Value::Set(s.clone()),
            Expr::Map(m) => Value::Map(m.clone()),
            Expr::Apply(a, b) => apply(&self.evaluate_expr(a, env)?, &self.evaluate_expr(b, env)?)?,
        })
    }

    /// All definitions by name.
    pub fn environment(&self) -> Result<HashMap<String, Value<C>>> {
        let mut env = HashMap::new();
        for d in &self.definitions {
            let v = self.evaluate_expr(&d.expr, &env)?;
            env.insert(d.name.clone(), v);
        }
        Ok(env)
    }

    /// Evaluates the codegen target.
    pub fn evaluate(&self) -> Result<Value<C>> {
        let env = self.environment()?;
        self.evaluate_expr(&self.codegen, &env)
    }
}
