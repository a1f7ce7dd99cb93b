//! Loop transformations expressed as schedule maps.
//!
//! Each constructor returns a map from a statement's iteration tuple to an
//! anonymous time tuple. Restrict it to the statement's domain and pass the
//! result to [`codegen_map`](crate::codegen::codegen_map).

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::iset::{AffExpr, BasicMap, Constraint, MapSpace, Tuple, UMap, Var};
use crate::num::{self, Coeff};

fn in_dims(arity: usize) -> Vec<String> {
    (0..arity).map(|d| format!("i{d}")).collect()
}

fn space(stmt: &str, arity: usize, params: &[&str], out: Vec<String>) -> Result<MapSpace> {
    let dims = in_dims(arity);
    let refs: Vec<&str> = dims.iter().map(String::as_str).collect();
    MapSpace::new(params, Tuple::new(stmt, &refs), Tuple::anonymous(out))
}

/// `lhs - rhs = 0`
fn equal<C: Coeff>(lhs: Var, rhs: &AffExpr<C>) -> Result<Constraint<C>> {
    Ok(Constraint::eq(AffExpr::var(lhs).minus(rhs)?))
}

/// `{ S[i0, ..] -> [i_perm[0], i_perm[1], ..] }`
pub fn interchange<C: Coeff>(stmt: &str, perm: &[usize]) -> Result<BasicMap<C>> {
    let arity = perm.len();
    let mut seen = vec![false; arity];
    for &p in perm {
        if p >= arity || std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation(perm.to_vec()));
        }
    }
    let out = (0..arity).map(|d| format!("o{d}")).collect();
    let cs = perm
        .iter()
        .enumerate()
        .map(|(k, &p)| equal(Var::Dim(arity + k), &AffExpr::var(Var::Dim(p))))
        .collect::<Result<_>>()?;
    BasicMap::new(space(stmt, arity, &[], out)?, Vec::new(), cs)
}

/// Rectangular tiling of `dims` (in the given order) with the matching
/// `sizes`: `S[i..] -> [t.., i..]` where `size * t <= i < size * (t + 1)`.
/// Tile iterators come first, followed by every original dimension.
pub fn tile<C: Coeff>(stmt: &str, arity: usize, dims: &[usize], sizes: &[C]) -> Result<BasicMap<C>> {
    if dims.len() != sizes.len() {
        return Err(Error::BadTileSize(format!(
            "{} dimensions but {} sizes",
            dims.len(),
            sizes.len()
        )));
    }
    let mut seen = HashSet::new();
    for (&d, &s) in dims.iter().zip(sizes) {
        if d >= arity {
            return Err(Error::BadTileSize(format!("dimension {d} out of range for arity {arity}")));
        }
        if !seen.insert(d) {
            return Err(Error::BadTileSize(format!("dimension {d} tiled twice")));
        }
        if s <= C::zero() {
            return Err(Error::BadTileSize(format!("size {s} for dimension {d} is not positive")));
        }
    }
    let n_tiles = dims.len();
    let mut out: Vec<String> = dims.iter().map(|d| format!("t{d}")).collect();
    out.extend((0..arity).map(|d| format!("o{d}")));

    let mut cs = Vec::new();
    for d in 0..arity {
        cs.push(equal(Var::Dim(arity + n_tiles + d), &AffExpr::var(Var::Dim(d)))?);
    }
    for (t, (&d, &size)) in dims.iter().zip(sizes).enumerate() {
        let tile = Var::Dim(arity + t);
        // i - size * t >= 0 and size * t + size - 1 - i >= 0
        let offset = AffExpr::from_terms([(Var::Dim(d), C::one()), (tile, num::neg(size)?)], C::zero())?;
        cs.push(Constraint::geq(offset.clone()));
        let mut rest = offset.negated()?;
        rest.add_constant(size - C::one())?;
        cs.push(Constraint::geq(rest));
    }
    BasicMap::new(space(stmt, arity, &[], out)?, Vec::new(), cs)
}

/// Splits a one-dimensional statement of extent `size_param` into `factor`
/// blocks of length `block_param` and runs them in lockstep:
/// block `b` sends `S[i]` to `[i - b * h, b]` for `b * h <= i < (b + 1) * h`.
/// Every piece also requires `size_param = factor * block_param`.
pub fn interleave<C: Coeff>(
    stmt: &str,
    arity: usize,
    factor: usize,
    size_param: &str,
    block_param: &str,
) -> Result<UMap<C>> {
    if arity != 1 {
        return Err(Error::UnsupportedArity(format!(
            "interleaving needs a one-dimensional statement, `{stmt}` has {arity} dimensions"
        )));
    }
    if factor == 0 {
        return Err(Error::BadTileSize("interleave factor must be positive".into()));
    }
    let f: C = num::cast(factor)?;
    let params = [size_param, block_param];
    let (n, h) = (Var::Param(0), Var::Param(1));
    let (i, c0, c1) = (Var::Dim(0), Var::Dim(1), Var::Dim(2));
    let mut pieces = Vec::new();
    for b in 0..factor {
        let b: C = num::cast(b)?;
        let bh = AffExpr::term(h, b);
        let next = AffExpr::term(h, b + C::one());
        let cs = vec![
            // c0 = i - b*h
            equal(c0, &AffExpr::var(i).minus(&bh)?)?,
            Constraint::eq(AffExpr::from_terms([(c1, C::one())], -b)?),
            Constraint::le(&bh, &AffExpr::var(i))?,
            Constraint::le(&AffExpr::var(i), &next.plus(&AffExpr::constant_expr(-C::one()))?)?,
            Constraint::eq(AffExpr::from_terms([(n, C::one()), (h, -f)], C::zero())?),
        ];
        let space = space(stmt, 1, &params, vec!["o0".into(), "o1".into()])?;
        pieces.push(BasicMap::new(space, Vec::new(), cs)?);
    }
    UMap::new(params.iter().map(|p| p.to_string()).collect(), pieces)
}
