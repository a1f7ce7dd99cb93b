//! Loop-nest generation by polyhedral scanning.
//!
//! A set is scanned in the lexicographic order of its own dimensions. A map is
//! treated as a schedule: its output tuple is scanned and each statement is
//! called with its input iterators recovered through [`schedule_check`].
//!
//! [`schedule_check`]: crate::iset::schedule_check

mod ast;
mod bound;
mod emit;
mod fm;
mod scan;

pub use ast::{LoopAst, LoopNest};
pub use bound::{BoundExpr, Rounding};
pub use emit::{emit_kernel_c, EmitOptions};
pub use fm::{eliminate, fm_bounds, implies, infeasible, project_onto};

use crate::error::{Error, Result};
use crate::iset::{invert_piece, AffExpr, UMap, USet, Var};
use crate::num::Coeff;
use crate::script::Value;

use scan::{Piece, Scanner};

fn common_arity(arities: impl Iterator<Item = usize>) -> Result<Option<usize>> {
    let mut out = None;
    for a in arities {
        match out {
            None => out = Some(a),
            Some(b) if b != a => {
                return Err(Error::UnsupportedUnionShape(format!(
                    "pieces scan spaces of different arity ({b} and {a})"
                )))
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Loops visiting every point of `s` in lexicographic order, calling the
/// piece's tuple name with the point's coordinates.
pub fn codegen_set<C: Coeff>(s: &USet<C>) -> Result<LoopNest<C>> {
    let s = s.normalize()?;
    let params = s.params().to_vec();
    let Some(depth) = common_arity(s.pieces().iter().map(|p| p.arity()))? else {
        return Ok(LoopNest {
            params,
            root: LoopAst::empty(),
        });
    };
    let pieces = s
        .pieces()
        .iter()
        .map(|p| Piece {
            cs: p.constraints.clone(),
            name: p.tuple_name().unwrap_or("S").to_string(),
            args: (0..depth).map(|d| AffExpr::var(Var::Dim(d))).collect(),
        })
        .collect();
    let scanner = Scanner {
        depth,
        dim_names: s.pieces()[0].space.tuple.dims.clone(),
    };
    Ok(LoopNest {
        root: scanner.scan(0, pieces, &[])?,
        params,
    })
}

/// Loops scanning the image of schedule `m` in lexicographic order.
pub fn codegen_map<C: Coeff>(m: &UMap<C>) -> Result<LoopNest<C>> {
    let m = m.normalize()?;
    let params = m.params().to_vec();
    let Some(depth) = common_arity(m.pieces().iter().map(|p| p.n_out()))? else {
        return Ok(LoopNest {
            params,
            root: LoopAst::empty(),
        });
    };
    let mut pieces = Vec::new();
    for p in m.pieces() {
        let inverse = invert_piece(p)?;
        let n_in = p.n_in();
        let mut cs = Vec::new();
        for c in &p.constraints {
            let mut c = c.clone();
            // inverse expressions already use output indices, so substitute
            // after shifting the output dims down
            c = c.map_vars(|v| match v {
                Var::Dim(d) if d >= n_in => Var::Dim(d - n_in),
                Var::Dim(d) => Var::Exists(d),
                other => other,
            })?;
            for (i, e) in inverse.iter().enumerate() {
                c = c.substitute(Var::Exists(i), e)?;
            }
            cs.push(c);
        }
        pieces.push(Piece {
            cs: crate::iset::simplify(&cs).unwrap_or_else(|| vec![crate::iset::falsum()]),
            name: p.space.input.name.clone().unwrap_or_else(|| "S".to_string()),
            args: inverse,
        });
    }
    let scanner = Scanner {
        depth,
        dim_names: m.pieces()[0].space.output.dims.clone(),
    };
    Ok(LoopNest {
        root: scanner.scan(0, pieces, &[])?,
        params,
    })
}

/// [`codegen_set`] or [`codegen_map`] depending on the value's kind.
pub fn codegen_value<C: Coeff>(v: &Value<C>) -> Result<LoopNest<C>> {
    match v {
        Value::Set(s) => codegen_set(s),
        Value::Map(m) => codegen_map(m),
    }
}
