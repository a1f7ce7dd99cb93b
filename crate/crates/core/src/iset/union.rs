use crate::error::{Error, Result};
use crate::iset::basic::{BasicMap, BasicSet};
use crate::iset::space::{union_params, Tuple};
use crate::num::Coeff;

/// A union of pairwise disjoint basic sets sharing one parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct USet<C> {
    params: Vec<String>,
    pieces: Vec<BasicSet<C>>,
}

/// A union of pairwise disjoint basic maps sharing one parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UMap<C> {
    params: Vec<String>,
    pieces: Vec<BasicMap<C>>,
}

fn merged_params<'a>(base: &[String], more: impl Iterator<Item = &'a [String]>) -> Vec<String> {
    more.fold(base.to_vec(), |acc, p| union_params(&acc, p))
}

/// Pairs up tuples by name. Same name with a different arity is an error, and
/// two non-empty operands without any common tuple are a space mismatch.
fn pairing(lhs: &[&Tuple], rhs: &[&Tuple]) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, a) in lhs.iter().enumerate() {
        for (j, b) in rhs.iter().enumerate() {
            if a.name != b.name {
                continue;
            }
            if a.arity() != b.arity() {
                return Err(Error::SpaceMismatch(format!(
                    "{} vs {}",
                    a.label(),
                    b.label()
                )));
            }
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() && !lhs.is_empty() && !rhs.is_empty() {
        return Err(Error::SpaceMismatch(format!(
            "no common tuple between {} and {}",
            lhs[0].label(),
            rhs[0].label()
        )));
    }
    Ok(pairs)
}

impl<C: Coeff> USet<C> {
    pub fn new(params: Vec<String>, pieces: Vec<BasicSet<C>>) -> Result<Self> {
        let params = merged_params(&params, pieces.iter().map(|p| p.params()));
        let pieces = pieces
            .iter()
            .map(|p| p.with_params(&params))
            .collect::<Result<_>>()?;
        Ok(Self { params, pieces })
    }

    pub fn empty(params: Vec<String>) -> Self {
        Self {
            params,
            pieces: Vec::new(),
        }
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn pieces(&self) -> &[BasicSet<C>] {
        &self.pieces
    }

    /// No pieces left (after normalization this means the set is empty).
    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_marked_empty())
    }

    /// Normalizes every piece and drops pieces proven empty.
    pub fn normalize(&self) -> Result<Self> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let n = p.normalize()?;
            if !n.is_marked_empty() {
                pieces.push(n);
            }
        }
        Ok(Self {
            params: self.params.clone(),
            pieces,
        })
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        let lhs: Vec<&Tuple> = self.pieces.iter().map(|p| &p.space.tuple).collect();
        let rhs: Vec<&Tuple> = other.pieces.iter().map(|p| &p.space.tuple).collect();
        let pairs = pairing(&lhs, &rhs)?;
        let params = union_params(&self.params, &other.params);
        let pieces = pairs
            .into_iter()
            .map(|(i, j)| self.pieces[i].intersect(&other.pieces[j]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, pieces)
    }

    pub fn cast<D: Coeff>(&self) -> Result<USet<D>> {
        Ok(USet {
            params: self.params.clone(),
            pieces: self.pieces.iter().map(|p| p.cast()).collect::<Result<_>>()?,
        })
    }
}

impl<C: Coeff> From<BasicSet<C>> for USet<C> {
    fn from(b: BasicSet<C>) -> Self {
        Self {
            params: b.params().to_vec(),
            pieces: vec![b],
        }
    }
}

impl<C: Coeff> UMap<C> {
    pub fn new(params: Vec<String>, pieces: Vec<BasicMap<C>>) -> Result<Self> {
        let params = merged_params(&params, pieces.iter().map(|p| p.params()));
        let pieces = pieces
            .iter()
            .map(|p| p.with_params(&params))
            .collect::<Result<_>>()?;
        Ok(Self { params, pieces })
    }

    pub fn empty(params: Vec<String>) -> Self {
        Self {
            params,
            pieces: Vec::new(),
        }
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn pieces(&self) -> &[BasicMap<C>] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_marked_empty())
    }

    pub fn normalize(&self) -> Result<Self> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let n = p.normalize()?;
            if !n.is_marked_empty() {
                pieces.push(n);
            }
        }
        Ok(Self {
            params: self.params.clone(),
            pieces,
        })
    }

    /// Pairs `x -> y` of this map with `x` in `domain`.
    pub fn restrict_domain(&self, domain: &USet<C>) -> Result<Self> {
        let lhs: Vec<&Tuple> = self.pieces.iter().map(|p| &p.space.input).collect();
        let rhs: Vec<&Tuple> = domain.pieces.iter().map(|p| &p.space.tuple).collect();
        let pairs = pairing(&lhs, &rhs)?;
        let params = union_params(&self.params, &domain.params);
        let pieces = pairs
            .into_iter()
            .map(|(i, j)| self.pieces[i].restrict_domain(&domain.pieces[j]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, pieces)
    }

    /// The union viewed as a set of `[in..., out...]` points.
    pub fn wrap(&self) -> USet<C> {
        USet {
            params: self.params.clone(),
            pieces: self.pieces.iter().map(|p| p.wrap()).collect(),
        }
    }

    pub fn cast<D: Coeff>(&self) -> Result<UMap<D>> {
        Ok(UMap {
            params: self.params.clone(),
            pieces: self.pieces.iter().map(|p| p.cast()).collect::<Result<_>>()?,
        })
    }
}

impl<C: Coeff> From<BasicMap<C>> for UMap<C> {
    fn from(b: BasicMap<C>) -> Self {
        Self {
            params: b.params().to_vec(),
            pieces: vec![b],
        }
    }
}
