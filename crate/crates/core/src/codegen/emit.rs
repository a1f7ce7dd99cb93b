use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::iset::{render_constraint, render_expr, Var};
use crate::num::Coeff;

use super::ast::{LoopAst, LoopNest};
use super::bound::{BoundExpr, Rounding};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Emitted verbatim on the line before every outermost loop, including
    /// loops nested only in guards.
    pub outer_pragma: Option<String>,
}

const FLOORD: &str = "#ifndef floord\n#define floord(n, d) (((n) < 0) ? -((-(n) + (d) - 1) / (d)) : (n) / (d))\n#endif\n";
const CEILD: &str = "#ifndef ceild\n#define ceild(n, d) (((n) < 0) ? -((-(n)) / (d)) : ((n) + (d) - 1) / (d))\n#endif\n";
const MAX: &str = "#ifndef max\n#define max(x, y) ((x) > (y) ? (x) : (y))\n#endif\n";
const MIN: &str = "#ifndef min\n#define min(x, y) ((x) < (y) ? (x) : (y))\n#endif\n";

#[derive(Default)]
struct Helpers {
    floord: bool,
    ceild: bool,
    max: bool,
    min: bool,
}

struct Emitter<'a, C> {
    nest: &'a LoopNest<C>,
    stmts: &'a BTreeMap<String, usize>,
    out: String,
    helpers: Helpers,
    pragma: Option<&'a str>,
    loop_depth: usize,
}

/// Prints `nest` as C99 loop code calling each statement as a macro.
///
/// `stmts` maps every statement name that may appear to its iterator count.
/// The output starts with `floord`/`ceild`/`max`/`min` definitions for just
/// the helpers the loops use; an empty nest prints nothing.
pub fn emit_kernel_c<C: Coeff>(
    nest: &LoopNest<C>,
    stmts: &BTreeMap<String, usize>,
    opts: &EmitOptions,
) -> Result<String> {
    if nest.root.is_empty() {
        return Ok(String::new());
    }
    let mut e = Emitter {
        nest,
        stmts,
        out: String::new(),
        helpers: Helpers::default(),
        pragma: opts.outer_pragma.as_deref(),
        loop_depth: 0,
    };
    e.node(&nest.root, 0)?;
    let mut text = String::new();
    for (used, def) in [
        (e.helpers.floord, FLOORD),
        (e.helpers.ceild, CEILD),
        (e.helpers.max, MAX),
        (e.helpers.min, MIN),
    ] {
        if used {
            text.push_str(def);
        }
    }
    if !text.is_empty() {
        text.push('\n');
    }
    text.push_str(&e.out);
    Ok(text)
}

impl<C: Coeff> Emitter<'_, C> {
    fn line(&mut self, indent: usize, s: &str) {
        let _ = writeln!(self.out, "{:width$}{s}", "", width = indent * 2);
    }

    fn name(&self) -> impl Fn(Var) -> String + '_ {
        move |v| self.nest.name_of(v)
    }

    fn bound(&mut self, b: &BoundExpr<C>) -> String {
        match b.rounding {
            Rounding::FloorDiv => self.helpers.floord = true,
            Rounding::CeilDiv => self.helpers.ceild = true,
            Rounding::None => {}
        }
        b.render(&self.name())
    }

    fn bounds(&mut self, bs: &[BoundExpr<C>], func: &str) -> String {
        let parts: Vec<String> = bs.iter().map(|b| self.bound(b)).collect();
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        if func == "max" {
            self.helpers.max = true;
        } else {
            self.helpers.min = true;
        }
        // nest pairwise: max(a, max(b, c))
        let mut it = parts.into_iter().rev();
        let mut acc = it.next().unwrap();
        for p in it {
            acc = format!("{func}({p}, {acc})");
        }
        acc
    }

    fn node(&mut self, n: &LoopAst<C>, indent: usize) -> Result<()> {
        match n {
            LoopAst::Seq(children) => {
                for c in children {
                    self.node(c, indent)?;
                }
            }
            LoopAst::Loop {
                iter,
                lower,
                upper,
                body,
                ..
            } => {
                let lo = self.bounds(lower, "max");
                let hi = self.bounds(upper, "min");
                if let (0, Some(p)) = (self.loop_depth, self.pragma) {
                    self.line(indent, p);
                }
                self.line(indent, &format!("for (int {iter} = {lo}; {iter} <= {hi}; {iter} += 1)"));
                self.loop_depth += 1;
                self.block(body, indent)?;
                self.loop_depth -= 1;
            }
            LoopAst::Guard { constraints, body } => {
                let conds: Vec<String> = {
                    let name = self.name();
                    constraints.iter().map(|c| render_constraint(c, &name, "==")).collect()
                };
                let text = format!("if ({})", conds.join(" && "));
                self.line(indent, &text);
                self.block(body, indent)?;
            }
            LoopAst::StmtCall { name, args } => {
                match self.stmts.get(name) {
                    None => return Err(Error::UnknownStatement(name.clone())),
                    Some(&arity) if arity != args.len() => {
                        return Err(Error::UnknownStatement(format!(
                            "{name} takes {arity} iterators but is called with {}",
                            args.len()
                        )))
                    }
                    Some(_) => {}
                }
                let rendered: Vec<String> = {
                    let names = self.name();
                    args.iter().map(|a| render_expr(a, &names)).collect()
                };
                let text = format!("{name}({});", rendered.join(", "));
                self.line(indent, &text);
            }
        }
        Ok(())
    }

    fn block(&mut self, body: &LoopAst<C>, indent: usize) -> Result<()> {
        if matches!(body, LoopAst::Seq(v) if v.len() > 1) {
            self.line(indent, "{");
            self.node(body, indent + 1)?;
            self.line(indent, "}");
        } else {
            self.node(body, indent + 1)?;
        }
        Ok(())
    }
}
