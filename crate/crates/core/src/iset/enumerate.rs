//! Point enumeration.
//!
//! This is the reference semantics for everything the code generator emits:
//! after binding parameters it scans dimensions outer to inner, computing the
//! numeric range of each dimension by eliminating the inner ones on dense
//! rows, then checks every original constraint at the leaf. It deliberately
//! shares no code with the symbolic scanner in `codegen`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::iset::aff::Var;
use crate::iset::basic::BasicSet;
use crate::iset::union::{UMap, USet};
use crate::num::{self, Coeff};

/// Parameter name to value.
pub type Bindings<C> = BTreeMap<String, C>;

pub type Point<C> = Vec<C>;

/// `sum(a[i] * x[i]) + c >= 0`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Row<C> {
    a: Vec<C>,
    c: C,
}

impl<C: Coeff> Row<C> {
    fn is_constant_from(&self, k: usize) -> bool {
        self.a[k..].iter().all(|x| x.is_zero())
    }

    fn tightened(mut self) -> Self {
        let g = self.a.iter().fold(C::zero(), |g, x| num::gcd(g, *x));
        if g > C::one() {
            for x in self.a.iter_mut() {
                *x = *x / g;
            }
            self.c = num::floor_div(self.c, g);
        }
        self
    }

    fn fix(&self, k: usize, v: C) -> Result<Self> {
        let mut r = self.clone();
        r.c = num::add(r.c, num::mul(r.a[k], v)?)?;
        r.a[k] = C::zero();
        Ok(r)
    }
}

fn eliminate<C: Coeff>(rows: Vec<Row<C>>, m: usize) -> Result<Vec<Row<C>>> {
    let (with, mut out): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| !r.a[m].is_zero());
    let (pos, neg): (Vec<_>, Vec<_>) = with.into_iter().partition(|r| r.a[m] > C::zero());
    for p in &pos {
        for n in &neg {
            let wp = num::neg(n.a[m])?;
            let wn = p.a[m];
            let mut a = Vec::with_capacity(p.a.len());
            for (x, y) in p.a.iter().zip(&n.a) {
                a.push(num::add(num::mul(*x, wp)?, num::mul(*y, wn)?)?);
            }
            let c = num::add(num::mul(p.c, wp)?, num::mul(n.c, wn)?)?;
            out.push(Row { a, c }.tightened());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

struct Scan<'a, C> {
    dims: usize,
    names: &'a [String],
    out: Vec<Point<C>>,
    prefix: Vec<C>,
}

impl<C: Coeff> Scan<'_, C> {
    fn run(&mut self, rows: &[Row<C>], k: usize) -> Result<()> {
        let mut live = Vec::with_capacity(rows.len());
        for r in rows {
            if r.is_constant_from(k) {
                if r.c < C::zero() {
                    return Ok(());
                }
            } else {
                live.push(r.clone());
            }
        }
        if k == self.dims {
            self.out.push(self.prefix.clone());
            return Ok(());
        }
        let mut sys = live.clone();
        for m in (k + 1..self.dims).rev() {
            sys = eliminate(sys, m)?;
        }
        let mut lo: Option<C> = None;
        let mut hi: Option<C> = None;
        for r in &sys {
            let a = r.a[k];
            if a.is_zero() {
                if r.c < C::zero() {
                    return Ok(());
                }
                continue;
            }
            // a*x + c >= 0
            if a > C::zero() {
                let b = num::ceil_div(num::neg(r.c)?, a);
                lo = Some(lo.map_or(b, |l| l.max(b)));
            } else {
                let b = num::floor_div(r.c, num::neg(a)?);
                hi = Some(hi.map_or(b, |h| h.min(b)));
            }
        }
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::UnboundedSet(self.names[k].clone()));
        };
        let mut v = lo;
        while v <= hi {
            let fixed = live.iter().map(|r| r.fix(k, v)).collect::<Result<Vec<_>>>()?;
            self.prefix.push(v);
            self.run(&fixed, k + 1)?;
            self.prefix.pop();
            v = num::add(v, C::one())?;
        }
        Ok(())
    }
}

/// All integer points of one basic set, in lexicographic order.
pub fn enumerate_basic<C: Coeff>(s: &BasicSet<C>, bindings: &Bindings<C>) -> Result<Vec<Point<C>>> {
    let s = s.normalize()?;
    if s.is_marked_empty() {
        return Ok(Vec::new());
    }
    let dims = s.arity();
    let mut rows = Vec::new();
    for c in &s.constraints {
        let mut a = vec![C::zero(); dims];
        let mut k = c.expr.constant();
        for (v, coeff) in c.expr.terms() {
            match v {
                Var::Dim(d) => a[d] = coeff,
                Var::Param(p) => {
                    let name = &s.space.params[p];
                    let val = bindings
                        .get(name)
                        .ok_or_else(|| Error::UnboundParameter(name.clone()))?;
                    k = num::add(k, num::mul(coeff, *val)?)?;
                }
                Var::Exists(_) => unreachable!("normalized set has no existentials"),
            }
        }
        let row = Row { a, c: k };
        if c.is_eq() {
            let neg = Row {
                a: row.a.iter().map(|x| num::neg(*x)).collect::<Result<_>>()?,
                c: num::neg(row.c)?,
            };
            rows.push(row);
            rows.push(neg);
        } else {
            rows.push(row);
        }
    }
    let rows: Vec<Row<C>> = rows.into_iter().map(Row::tightened).collect();
    let mut scan = Scan {
        dims,
        names: &s.space.tuple.dims,
        out: Vec::new(),
        prefix: Vec::with_capacity(dims),
    };
    scan.run(&rows, 0)?;
    Ok(scan.out)
}

/// All integer points of a union, sorted lexicographically without duplicates.
pub fn enumerate<C: Coeff>(s: &USet<C>, bindings: &Bindings<C>) -> Result<Vec<Point<C>>> {
    let mut all = Vec::new();
    for p in s.pieces() {
        all.extend(enumerate_basic(p, bindings)?);
    }
    all.sort();
    all.dedup();
    Ok(all)
}

/// Points per piece, keeping the tuple name; used to check disjointness.
pub fn enumerate_pieces<C: Coeff>(
    s: &USet<C>,
    bindings: &Bindings<C>,
) -> Result<Vec<(Option<String>, Vec<Point<C>>)>> {
    s.pieces()
        .iter()
        .map(|p| Ok((p.tuple_name().map(str::to_string), enumerate_basic(p, bindings)?)))
        .collect()
}

/// All `(input, output)` pairs of a map, sorted.
pub fn enumerate_map<C: Coeff>(m: &UMap<C>, bindings: &Bindings<C>) -> Result<Vec<(Point<C>, Point<C>)>> {
    let mut pairs = Vec::new();
    for p in m.pieces() {
        let n_in = p.n_in();
        for pt in enumerate_basic(&p.wrap(), bindings)? {
            let (a, b) = pt.split_at(n_in);
            pairs.push((a.to_vec(), b.to_vec()));
        }
    }
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}

/// Convenience for building bindings in tests and tools.
pub fn bindings<C: Coeff>(pairs: &[(&str, C)]) -> Bindings<C> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
