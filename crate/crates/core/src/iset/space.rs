use std::collections::HashSet;

use crate::error::{Error, Result};

/// A named (or anonymous) tuple of dimension names, e.g. `S[i, j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tuple {
    pub name: Option<String>,
    pub dims: Vec<String>,
}

impl Tuple {
    pub fn new(name: impl Into<String>, dims: &[&str]) -> Self {
        Self {
            name: Some(name.into()),
            dims: dims.iter().map(|d| d.to_string()).collect(),
        }
    }

    pub fn anonymous(dims: Vec<String>) -> Self {
        Self { name: None, dims }
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    /// Same tuple name and arity.
    pub fn compatible(&self, other: &Tuple) -> bool {
        self.name == other.name && self.arity() == other.arity()
    }

    pub fn label(&self) -> String {
        format!("{}[{}]", self.name.as_deref().unwrap_or(""), self.dims.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetSpace {
    pub params: Vec<String>,
    pub tuple: Tuple,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MapSpace {
    pub params: Vec<String>,
    pub input: Tuple,
    pub output: Tuple,
}

impl SetSpace {
    pub fn new(params: &[&str], tuple: Tuple) -> Result<Self> {
        let s = Self {
            params: params.iter().map(|p| p.to_string()).collect(),
            tuple,
        };
        check_unique(s.params.iter().chain(&s.tuple.dims))?;
        Ok(s)
    }

    pub fn dim_name(&self, d: usize) -> &str {
        &self.tuple.dims[d]
    }
}

impl MapSpace {
    pub fn new(params: &[&str], input: Tuple, output: Tuple) -> Result<Self> {
        let s = Self {
            params: params.iter().map(|p| p.to_string()).collect(),
            input,
            output,
        };
        check_unique(s.params.iter().chain(&s.input.dims).chain(&s.output.dims))?;
        Ok(s)
    }

    pub fn n_in(&self) -> usize {
        self.input.arity()
    }

    pub fn n_out(&self) -> usize {
        self.output.arity()
    }

    /// Name of a combined dimension index (inputs first, then outputs).
    pub fn dim_name(&self, d: usize) -> &str {
        if d < self.n_in() {
            &self.input.dims[d]
        } else {
            &self.output.dims[d - self.n_in()]
        }
    }

    /// The wrapped set space `[in..., out...]` used for point-level reasoning.
    pub fn wrapped(&self) -> SetSpace {
        let mut dims = self.input.dims.clone();
        dims.extend(self.output.dims.iter().cloned());
        SetSpace {
            params: self.params.clone(),
            tuple: Tuple {
                name: self.input.name.clone(),
                dims,
            },
        }
    }
}

pub(crate) fn check_unique<'a>(names: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::SpaceMismatch(format!("duplicate name `{n}` in space")));
        }
    }
    Ok(())
}

/// Ordered union of two parameter lists (first occurrence wins).
pub fn union_params(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for p in b {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}

/// Returns a name not contained in `taken`, derived from `base`.
pub(crate) fn fresh_name(base: &str, taken: &HashSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (0..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded name supply")
}
