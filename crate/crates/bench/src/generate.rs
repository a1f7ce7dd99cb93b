//! Kernel fragments for the init, run and val phases of a pattern.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use polystream_core::codegen::{codegen_map, codegen_value, emit_kernel_c, EmitOptions};
use polystream_core::iset::UMap;
use polystream_core::script::{parse_script, Value};
use polystream_core::transforms::{interchange, interleave, tile};
use polystream_core::{Map, Nest};

use crate::error::{Error, Result};
use crate::pattern::{PatternSpec, Role, Schedule};

/// Parameter name an interleaved schedule uses for the block length.
pub const BLOCK_PARAM: &str = "h";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Transform {
    Interchange(Vec<usize>),
    /// `(dimension, tile size)` in the order given.
    Tile(Vec<(usize, i64)>),
    Interleave(usize),
}

impl From<Transform> for String {
    fn from(t: Transform) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for Transform {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Transform {
    type Err = Error;

    /// `interchange=1,0`, `tile=0:32,1:64,2:16` or `interleave=2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::BadConfig(format!("transform `{s}`: {why}"));
        let (kind, args) = s.split_once('=').ok_or_else(|| bad("expected kind=arguments"))?;
        let ints = |text: &str| -> Result<Vec<i64>> {
            text.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| bad("arguments must be integers")))
                .collect()
        };
        match kind.trim() {
            "interchange" => {
                let perm = ints(args)?;
                if perm.iter().any(|&p| p < 0) {
                    return Err(bad("negative dimension"));
                }
                Ok(Transform::Interchange(perm.into_iter().map(|p| p as usize).collect()))
            }
            "tile" => {
                let mut out = Vec::new();
                for part in args.split(',') {
                    let (d, size) = part.split_once(':').ok_or_else(|| bad("expected dim:size pairs"))?;
                    let d: usize = d.trim().parse().map_err(|_| bad("dimension must be a non-negative integer"))?;
                    let size: i64 = size.trim().parse().map_err(|_| bad("size must be an integer"))?;
                    out.push((d, size));
                }
                out.sort_by_key(|(d, _)| *d);
                Ok(Transform::Tile(out))
            }
            "interleave" => {
                let f: usize = args.trim().parse().map_err(|_| bad("factor must be a positive integer"))?;
                if f == 0 {
                    return Err(bad("factor must be a positive integer"));
                }
                Ok(Transform::Interleave(f))
            }
            other => Err(bad(&format!("unknown kind `{other}`"))),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Interchange(p) => {
                let p: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "interchange={}", p.join(","))
            }
            Transform::Tile(t) => {
                let t: Vec<String> = t.iter().map(|(d, s)| format!("{d}:{s}")).collect();
                write!(f, "tile={}", t.join(","))
            }
            Transform::Interleave(k) => write!(f, "interleave={k}"),
        }
    }
}

impl Transform {
    /// Sizes must be multiples of this for the transform to cover the domain.
    pub fn size_multiple(&self) -> u64 {
        match self {
            Transform::Interleave(f) => *f as u64,
            _ => 1,
        }
    }

    /// The schedule map for statement `stmt` of the given arity.
    pub fn relation(&self, stmt: &str, arity: usize) -> polystream_core::Result<Map> {
        match self {
            Transform::Interchange(perm) => {
                if perm.len() != arity {
                    return Err(polystream_core::Error::NotAPermutation(perm.clone()));
                }
                Ok(Map::from(interchange(stmt, perm)?))
            }
            Transform::Tile(t) => {
                let dims: Vec<usize> = t.iter().map(|(d, _)| *d).collect();
                let sizes: Vec<i64> = t.iter().map(|(_, s)| *s).collect();
                Ok(Map::from(tile(stmt, arity, &dims, &sizes)?))
            }
            Transform::Interleave(f) => interleave(stmt, arity, *f, "n", BLOCK_PARAM),
        }
    }
}

/// A C integer the driver derives from `n`: `name = n / divisor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedParam {
    pub name: String,
    pub divisor: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fragment {
    Generated { nest: Nest, stmts: BTreeMap<String, usize> },
    Raw(String),
}

impl Fragment {
    /// Kernel text with `pragma` on the line before each outermost loop.
    pub fn render(&self, pragma: Option<&str>) -> Result<String> {
        match self {
            Fragment::Generated { nest, stmts } => {
                let opts = EmitOptions {
                    outer_pragma: pragma.map(str::to_string),
                };
                emit_kernel_c(nest, stmts, &opts).map_err(|e| Error::model("emit", e))
            }
            Fragment::Raw(text) => Ok(match pragma {
                Some(p) => format!("{p}\n{text}"),
                None => text.clone(),
            }),
        }
    }

    /// Kernel text with OpenMP directives removed, for sequential counting.
    pub fn render_plain(&self) -> Result<String> {
        match self {
            Fragment::Raw(text) => Ok(text
                .lines()
                .filter(|l| !l.trim_start().starts_with("#pragma omp"))
                .map(|l| format!("{l}\n"))
                .collect()),
            g => g.render(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernels {
    pub init: Fragment,
    pub run: Fragment,
    pub val: Fragment,
    pub derived: Vec<DerivedParam>,
    pub transforms: Vec<Transform>,
}

impl Kernels {
    pub fn get(&self, role: Role) -> &Fragment {
        match role {
            Role::Init => &self.init,
            Role::Run => &self.run,
            Role::Val => &self.val,
        }
    }
}

fn evaluate(file: &str, text: &str) -> Result<Value<i64>> {
    let script = parse_script::<i64>(text).map_err(|e| Error::model(file, e))?;
    script.evaluate().map_err(|e| Error::model(file, e))
}

fn apply_transform(file: &str, value: Value<i64>, t: &Transform) -> Result<Nest> {
    let Value::Set(domain) = value else {
        return Err(Error::BadConfig(format!(
            "{file} already evaluates to a schedule map; transforms apply to iteration domains"
        )));
    };
    let mut shape: Option<(String, usize)> = None;
    for piece in domain.pieces() {
        let s = (piece.tuple_name().unwrap_or("S").to_string(), piece.arity());
        match &shape {
            Some(prev) if *prev != s => {
                return Err(Error::BadConfig(format!("{file}: transforms need a single statement, found {} and {}", prev.0, s.0)))
            }
            _ => shape = Some(s),
        }
    }
    let Some((stmt, arity)) = shape else {
        return codegen_value(&Value::Set(domain)).map_err(|e| Error::model(file, e));
    };
    let rel: UMap<i64> = t.relation(&stmt, arity).map_err(|e| Error::model(format!("{file}: {t}"), e))?;
    let sched = rel.restrict_domain(&domain).map_err(|e| Error::model(format!("{file}: {t}"), e))?;
    codegen_map(&sched).map_err(|e| Error::model(format!("{file}: {t}"), e))
}

/// Generates the three fragments, applying `transforms` to the run schedule.
pub fn generate_kernels(p: &PatternSpec, transforms: &[Transform]) -> Result<Kernels> {
    if transforms.len() > 1 {
        return Err(Error::BadConfig("at most one transform per run".into()));
    }
    let mut derived = Vec::new();
    if let Some(Transform::Interleave(f)) = transforms.first() {
        derived.push(DerivedParam {
            name: BLOCK_PARAM.into(),
            divisor: *f as u64,
        });
    }
    let mut frags = Vec::new();
    for role in [Role::Init, Role::Run, Role::Val] {
        let table: BTreeMap<String, usize> = p.statements_with(role).map(|s| (s.name.clone(), s.arity())).collect();
        let frag = match p.schedules.get(role) {
            Schedule::RawC { file, text } => {
                if role == Role::Run && !transforms.is_empty() {
                    return Err(Error::BadConfig(format!("{file} is raw C; transforms need a script schedule")));
                }
                Fragment::Raw(text.clone())
            }
            Schedule::Script { file, text } => {
                let value = evaluate(file, text)?;
                let nest = match transforms.first() {
                    Some(t) if role == Role::Run => apply_transform(file, value, t)?,
                    _ => codegen_value(&value).map_err(|e| Error::model(file.clone(), e))?,
                };
                for param in &nest.params {
                    let known = param == "n" || param == "t" || derived.iter().any(|d| &d.name == param);
                    if !known {
                        return Err(Error::model(file.clone(), polystream_core::Error::UnboundParameter(param.clone())));
                    }
                }
                Fragment::Generated { nest, stmts: table }
            }
        };
        frags.push(frag);
    }
    let val = frags.pop().unwrap();
    let run = frags.pop().unwrap();
    let init = frags.pop().unwrap();
    Ok(Kernels {
        init,
        run,
        val,
        derived,
        transforms: transforms.to_vec(),
    })
}
