//! Pattern directories: `kernel.spec` plus the init/run/val schedules.
//!
//! ```text
//! name = triad
//!
//! [spaces]
//! A = double[n]
//!
//! [mappings]
//! A_map(i) = A[i]
//!
//! [statements]
//! Triad_run(i) = A_map(i) = B_map(i) + scalar * C_map(i);
//!
//! [clause]
//! schedule(static)
//!
//! [params]
//! scalar = 3.0
//!
//! [measure]
//! bytes_per_instance = 24
//! transform = interleave=2
//! ```
//!
//! Schedules are `init`, `run` and `val` files next to `kernel.spec`, each
//! either a `.pset` script or a `.c` kernel copied through unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use polystream_core::script::{parse_script, Value};

use crate::error::{Error, Location, Result};
use crate::generate::Transform;

/// Calls allowed in statement bodies besides mapping references.
pub const BUILTIN_CALLS: &[&str] = &[
    "VALIDATE", "APPROX", "fabs", "sqrt", "exp", "log", "pow", "sin", "cos", "fmin", "fmax", "floor", "ceil",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Double,
    Float,
    Int,
    Long,
}

impl ElementKind {
    pub fn size(self) -> u64 {
        match self {
            ElementKind::Double | ElementKind::Long => 8,
            ElementKind::Float | ElementKind::Int => 4,
        }
    }

    pub fn c_type(self) -> &'static str {
        match self {
            ElementKind::Double => "double",
            ElementKind::Float => "float",
            ElementKind::Int => "int",
            ElementKind::Long => "long",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "double" => ElementKind::Double,
            "float" => ElementKind::Float,
            "int" => ElementKind::Int,
            "long" => ElementKind::Long,
            _ => return None,
        })
    }
}

/// `n_coeff * n + t_coeff * t + constant`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extent {
    pub n: i64,
    pub t: i64,
    pub constant: i64,
}

impl Extent {
    pub fn eval(&self, n: u64, t: u64) -> i64 {
        self.n * n as i64 + self.t * t as i64 + self.constant
    }

    /// C expression with the driver's `n` and `t` variables.
    pub fn to_c(&self) -> String {
        format!("({self})")
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut e = Extent {
            n: 0,
            t: 0,
            constant: 0,
        };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return None;
        }
        let mut rest = compact.as_str();
        let mut first = true;
        while !rest.is_empty() {
            let sign = match rest.as_bytes()[0] {
                b'+' => {
                    rest = &rest[1..];
                    1
                }
                b'-' => {
                    rest = &rest[1..];
                    -1
                }
                _ if first => 1,
                _ => return None,
            };
            first = false;
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            rest = &rest[end..];
            let (coef, var) = match term.split_once('*') {
                Some((a, b)) => (a.parse::<i64>().ok()?, b),
                None if term.chars().all(|c| c.is_ascii_digit()) => (term.parse::<i64>().ok()?, ""),
                None => (1, term),
            };
            let slot = match var {
                "" => &mut e.constant,
                "n" => &mut e.n,
                "t" => &mut e.t,
                _ => return None,
            };
            *slot += sign * coef;
        }
        Some(e)
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(i64, String)> = Vec::new();
        for (c, v) in [(self.n, "n"), (self.t, "t")] {
            match c {
                0 => {}
                1 | -1 => parts.push((c, v.to_string())),
                _ => parts.push((c.signum(), format!("{} * {v}", c.abs()))),
            }
        }
        if self.constant != 0 || parts.is_empty() {
            parts.push((if self.constant < 0 { -1 } else { 1 }, self.constant.abs().to_string()));
        }
        for (i, (sign, text)) in parts.iter().enumerate() {
            match (i, *sign < 0) {
                (0, true) => write!(f, "-{text}")?,
                (0, false) => write!(f, "{text}")?,
                (_, true) => write!(f, " - {text}")?,
                (_, false) => write!(f, " + {text}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Unified,
    PerThread,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSpace {
    pub name: String,
    pub element: ElementKind,
    pub extents: Vec<Extent>,
    /// Row multiplier between consecutive threads' copies.
    pub padding: u64,
    pub layout: Layout,
}

impl DataSpace {
    /// Elements of one copy at size `n` with `t` threads.
    pub fn elements(&self, n: u64, t: u64) -> u64 {
        self.extents.iter().map(|e| e.eval(n, t).max(0) as u64).product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryMapping {
    pub name: String,
    pub params: Vec<String>,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Init,
    Run,
    Val,
}

impl Role {
    pub fn suffix(self) -> &'static str {
        match self {
            Role::Init => "_init",
            Role::Run => "_run",
            Role::Val => "_val",
        }
    }

    pub fn file_stem(self) -> &'static str {
        &self.suffix()[1..]
    }

    pub fn of_name(name: &str) -> Option<Role> {
        [Role::Init, Role::Run, Role::Val]
            .into_iter()
            .find(|r| name.ends_with(r.suffix()) && name.len() > r.suffix().len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementMacro {
    pub name: String,
    pub role: Role,
    pub params: Vec<String>,
    pub body: String,
}

impl StatementMacro {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// The name without its role suffix.
    pub fn family(&self) -> &str {
        &self.name[..self.name.len() - self.role.suffix().len()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Script { file: String, text: String },
    RawC { file: String, text: String },
}

impl Schedule {
    pub fn file(&self) -> &str {
        match self {
            Schedule::Script { file, .. } | Schedule::RawC { file, .. } => file,
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Schedule::Script { text, .. } | Schedule::RawC { text, .. } => text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedules {
    pub init: Schedule,
    pub run: Schedule,
    pub val: Schedule,
}

impl Schedules {
    pub fn get(&self, role: Role) -> &Schedule {
        match role {
            Role::Init => &self.init,
            Role::Run => &self.run,
            Role::Val => &self.val,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PatternSpec {
    pub name: String,
    /// Smallest size the schedules are meaningful for.
    pub min_n: u64,
    pub spaces: Vec<DataSpace>,
    pub mappings: Vec<MemoryMapping>,
    pub statements: Vec<StatementMacro>,
    pub clause: String,
    /// Name and C literal of each scalar parameter.
    pub params: Vec<(String, String)>,
    pub bytes_per_instance: Option<u64>,
    pub counters: Vec<String>,
    /// Transform applied to the run schedule unless the caller picks one.
    pub transform: Option<Transform>,
    pub schedules: Schedules,
    /// Declaration lines in `kernel.spec`, keyed `space:A`, `mapping:A_map`, ...
    pub lines: BTreeMap<String, usize>,
}

impl PartialEq for PatternSpec {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.min_n == o.min_n
            && self.spaces == o.spaces
            && self.mappings == o.mappings
            && self.statements == o.statements
            && self.clause == o.clause
            && self.params == o.params
            && self.bytes_per_instance == o.bytes_per_instance
            && self.counters == o.counters
            && self.transform == o.transform
            && self.schedules == o.schedules
    }
}

impl PatternSpec {
    pub fn space(&self, name: &str) -> Option<&DataSpace> {
        self.spaces.iter().find(|s| s.name == name)
    }

    pub fn mapping(&self, name: &str) -> Option<&MemoryMapping> {
        self.mappings.iter().find(|m| m.name == name)
    }

    pub fn statement(&self, name: &str) -> Option<&StatementMacro> {
        self.statements.iter().find(|s| s.name == name)
    }

    pub fn statements_with(&self, role: Role) -> impl Iterator<Item = &StatementMacro> {
        self.statements.iter().filter(move |s| s.role == role)
    }

    pub fn has_per_thread(&self) -> bool {
        self.spaces.iter().any(|s| s.layout == Layout::PerThread)
    }

    fn location(&self, key: &str) -> Location {
        Location {
            file: "kernel.spec".into(),
            line: self.lines.get(key).copied().unwrap_or(0),
        }
    }

    /// Bytes moved by one instance of the run family, echoed in every report.
    pub fn run_bytes_per_instance(&self) -> u64 {
        self.statements_with(Role::Run)
            .map(|s| derive_bytes_per_instance(s, self))
            .max()
            .unwrap_or(0)
    }

    /// `kernel.spec` text that parses back to this pattern.
    pub fn to_kernel_spec(&self) -> String {
        let mut out = format!("name = {}\n", self.name);
        if self.min_n != 1 {
            out.push_str(&format!("min_n = {}\n", self.min_n));
        }
        out.push_str("\n[spaces]\n");
        for s in &self.spaces {
            let dims: String = s.extents.iter().map(|e| format!("[{e}]")).collect();
            out.push_str(&format!("{} = {}{dims}", s.name, s.element.c_type()));
            if s.layout == Layout::PerThread {
                out.push_str(" per_thread");
            }
            if s.padding != 1 {
                out.push_str(&format!(" pad({})", s.padding));
            }
            out.push('\n');
        }
        out.push_str("\n[mappings]\n");
        for m in &self.mappings {
            out.push_str(&format!("{}({}) = {}\n", m.name, m.params.join(", "), m.body));
        }
        out.push_str("\n[statements]\n");
        for s in &self.statements {
            out.push_str(&format!("{}({}) = {}\n", s.name, s.params.join(", "), s.body));
        }
        out.push_str("\n[clause]\n");
        if !self.clause.is_empty() {
            out.push_str(&self.clause);
            out.push('\n');
        }
        if !self.params.is_empty() {
            out.push_str("\n[params]\n");
            for (k, v) in &self.params {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        if self.bytes_per_instance.is_some() || !self.counters.is_empty() || self.transform.is_some() {
            out.push_str("\n[measure]\n");
            if let Some(b) = self.bytes_per_instance {
                out.push_str(&format!("bytes_per_instance = {b}\n"));
            }
            if !self.counters.is_empty() {
                out.push_str(&format!("counters = {}\n", self.counters.join(", ")));
            }
            if let Some(t) = &self.transform {
                out.push_str(&format!("transform = {t}\n"));
            }
        }
        out
    }

    /// Hex SHA-256 over `kernel.spec` and the schedule files.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_kernel_spec());
        for role in [Role::Init, Role::Run, Role::Val] {
            let s = self.schedules.get(role);
            h.update(s.file());
            h.update([0]);
            h.update(s.text());
        }
        format!("{:x}", h.finalize())
    }
}

/// Identifiers in C text with the character that follows each (after spaces).
pub(crate) fn identifiers(text: &str) -> Vec<(&str, Option<char>)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.' || bytes[i] == b'_') {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let next = text[i..].chars().find(|c| !c.is_whitespace());
            out.push((&text[start..i], next));
        } else if c == b'"' || c == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                i += if bytes[i] == b'\\' { 2 } else { 1 };
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Distinct mapping names referenced in `body`, in first-use order.
pub fn mapping_refs<'a>(body: &'a str, p: &PatternSpec) -> Vec<&'a str> {
    let mut seen = Vec::new();
    for (id, next) in identifiers(body) {
        if next == Some('(') && p.mapping(id).is_some() && !seen.contains(&id) {
            seen.push(id);
        }
    }
    seen
}

/// Data spaces a mapping body indexes.
pub fn mapping_spaces<'a>(m: &'a MemoryMapping, p: &PatternSpec) -> Vec<&'a str> {
    identifiers(&m.body)
        .into_iter()
        .filter(|(id, next)| *next == Some('[') && p.space(id).is_some())
        .map(|(id, _)| id)
        .collect()
}

/// Bytes per executed instance: the `[measure]` override for run statements,
/// otherwise distinct mapping references times their element size.
pub fn derive_bytes_per_instance(stmt: &StatementMacro, p: &PatternSpec) -> u64 {
    if let (Role::Run, Some(b)) = (stmt.role, p.bytes_per_instance) {
        return b;
    }
    mapping_refs(&stmt.body, p)
        .into_iter()
        .filter_map(|m| p.mapping(m))
        .map(|m| {
            mapping_spaces(m, p)
                .first()
                .and_then(|s| p.space(s))
                .map_or(8, |s| s.element.size())
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCode {
    DirectArrayAccess,
    ZeroBytesPerInstance,
    MixedRunBytes,
    PerThreadNeedsIndependent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub at: Location,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {sev} [{:?}] {}", self.at, self.code, self.message)
    }
}

/// Lint findings; empty when the pattern is clean.
pub fn validate_pattern(p: &PatternSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for s in &p.statements {
        for (id, _) in identifiers(&s.body) {
            if p.space(id).is_some() {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    code: DiagnosticCode::DirectArrayAccess,
                    message: format!("statement `{}` names data space `{id}` instead of a mapping", s.name),
                    at: p.location(&format!("statement:{}", s.name)),
                });
            }
        }
    }
    for role in [Role::Init, Role::Run, Role::Val] {
        if let Schedule::RawC { file, text } = p.schedules.get(role) {
            for (i, line) in text.lines().enumerate() {
                for (id, _) in identifiers(line) {
                    if p.space(id).is_some() {
                        out.push(Diagnostic {
                            severity: Severity::Warning,
                            code: DiagnosticCode::DirectArrayAccess,
                            message: format!("kernel names data space `{id}` instead of a statement macro"),
                            at: Location {
                                file: file.clone(),
                                line: i + 1,
                            },
                        });
                    }
                }
            }
        }
    }
    let run: Vec<&StatementMacro> = p.statements_with(Role::Run).collect();
    for s in &run {
        if derive_bytes_per_instance(s, p) == 0 {
            out.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::ZeroBytesPerInstance,
                message: format!("`{}` moves no counted bytes; reference a mapping or set bytes_per_instance", s.name),
                at: p.location(&format!("statement:{}", s.name)),
            });
        }
    }
    let sizes: BTreeSet<u64> = run.iter().map(|s| derive_bytes_per_instance(s, p)).collect();
    if sizes.len() > 1 {
        out.push(Diagnostic {
            severity: Severity::Warning,
            code: DiagnosticCode::MixedRunBytes,
            message: format!("run statements move different byte counts {sizes:?}; the largest is reported"),
            at: p.location("section:statements"),
        });
    }
    out
}

/// [`validate_pattern`] plus the checks that depend on the template choice.
pub fn validate_for_template(p: &PatternSpec, independent: bool) -> Vec<Diagnostic> {
    let mut out = validate_pattern(p);
    if !independent {
        for s in p.spaces.iter().filter(|s| s.layout == Layout::PerThread) {
            out.push(Diagnostic {
                severity: Severity::Error,
                code: DiagnosticCode::PerThreadNeedsIndependent,
                message: format!("space `{}` is per_thread but the template shares data spaces", s.name),
                at: p.location(&format!("space:{}", s.name)),
            });
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        at: Location {
            file: "kernel.spec".into(),
            line,
        },
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `Name(a, b) = body`
fn parse_macro_line(line: usize, text: &str) -> Result<(String, Vec<String>, String)> {
    let open = text.find('(').ok_or_else(|| parse_err(line, "expected `Name(iterators) = body`"))?;
    let close = text[open..].find(')').map(|c| open + c).ok_or_else(|| parse_err(line, "unclosed `(`"))?;
    let name = text[..open].trim();
    if !is_ident(name) {
        return Err(parse_err(line, format!("`{name}` is not an identifier")));
    }
    let params: Vec<String> = text[open + 1..close]
        .split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    if params.is_empty() {
        return Err(parse_err(line, format!("`{name}` needs at least one iterator")));
    }
    if let Some(p) = params.iter().find(|p| !is_ident(p)) {
        return Err(parse_err(line, format!("iterator `{p}` is not an identifier")));
    }
    let rest = text[close + 1..].trim_start();
    let body = rest
        .strip_prefix('=')
        .ok_or_else(|| parse_err(line, format!("expected `=` after `{name}(...)`")))?
        .trim();
    if body.is_empty() {
        return Err(parse_err(line, format!("`{name}` has an empty body")));
    }
    Ok((name.to_string(), params, body.to_string()))
}

fn parse_space(line: usize, name: &str, value: &str) -> Result<DataSpace> {
    let open = value.find('[').ok_or_else(|| parse_err(line, "expected `type[extent]...`"))?;
    let element = ElementKind::parse(value[..open].trim())
        .ok_or_else(|| parse_err(line, format!("unknown element type `{}`", value[..open].trim())))?;
    let mut rest = &value[open..];
    let mut extents = Vec::new();
    while let Some(r) = rest.strip_prefix('[') {
        let close = r.find(']').ok_or_else(|| parse_err(line, "unclosed `[`"))?;
        let e = Extent::parse(&r[..close])
            .ok_or_else(|| parse_err(line, format!("extent `{}` must be affine in n and t", &r[..close])))?;
        extents.push(e);
        rest = r[close + 1..].trim_start();
    }
    let mut padding = 1;
    let mut layout = Layout::Unified;
    for word in rest.split_whitespace() {
        if word == "per_thread" {
            layout = Layout::PerThread;
        } else if let Some(v) = word.strip_prefix("pad(").and_then(|w| w.strip_suffix(')')) {
            padding = v
                .parse::<u64>()
                .ok()
                .filter(|&p| p >= 1)
                .ok_or_else(|| parse_err(line, format!("padding `{v}` must be a positive integer")))?;
        } else {
            return Err(parse_err(line, format!("unknown space option `{word}`")));
        }
    }
    Ok(DataSpace {
        name: name.to_string(),
        element,
        extents,
        padding,
        layout,
    })
}

/// Parses `kernel.spec` text and checks it against `schedules`.
pub fn parse_kernel_spec(text: &str, schedules: Schedules) -> Result<PatternSpec> {
    let mut p = PatternSpec {
        name: String::new(),
        min_n: 1,
        spaces: Vec::new(),
        mappings: Vec::new(),
        statements: Vec::new(),
        clause: String::new(),
        params: Vec::new(),
        bytes_per_instance: None,
        counters: Vec::new(),
        transform: None,
        schedules,
        lines: BTreeMap::new(),
    };
    let mut section = String::new();
    let mut clause_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(s) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if !["spaces", "mappings", "statements", "clause", "params", "measure"].contains(&s) {
                return Err(parse_err(line, format!("unknown section `[{s}]`")));
            }
            section = s.to_string();
            p.lines.insert(format!("section:{s}"), line);
            continue;
        }
        match section.as_str() {
            "clause" => clause_lines.push(t.to_string()),
            "mappings" => {
                let (name, params, body) = parse_macro_line(line, t)?;
                if p.mapping(&name).is_some() {
                    return Err(parse_err(line, format!("mapping `{name}` declared twice")));
                }
                p.lines.insert(format!("mapping:{name}"), line);
                p.mappings.push(MemoryMapping { name, params, body });
            }
            "statements" => {
                let (name, params, body) = parse_macro_line(line, t)?;
                let role = Role::of_name(&name)
                    .ok_or_else(|| parse_err(line, format!("statement `{name}` must end in _init, _run or _val")))?;
                if p.statement(&name).is_some() {
                    return Err(parse_err(line, format!("statement `{name}` declared twice")));
                }
                p.lines.insert(format!("statement:{name}"), line);
                p.statements.push(StatementMacro {
                    name,
                    role,
                    params,
                    body,
                });
            }
            _ => {
                let (key, value) = t
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
                match (section.as_str(), key) {
                    ("", "name") => p.name = value.to_string(),
                    ("", "min_n") => {
                        p.min_n = value
                            .parse()
                            .ok()
                            .filter(|&n| n >= 1)
                            .ok_or_else(|| parse_err(line, "min_n must be a positive integer"))?
                    }
                    ("spaces", name) => {
                        if !is_ident(name) {
                            return Err(parse_err(line, format!("`{name}` is not an identifier")));
                        }
                        if p.space(name).is_some() {
                            return Err(parse_err(line, format!("space `{name}` declared twice")));
                        }
                        p.lines.insert(format!("space:{name}"), line);
                        p.spaces.push(parse_space(line, name, value)?);
                    }
                    ("params", name) => {
                        if !is_ident(name) {
                            return Err(parse_err(line, format!("`{name}` is not an identifier")));
                        }
                        if value.parse::<f64>().is_err() {
                            return Err(parse_err(line, format!("parameter `{name}` needs a numeric value")));
                        }
                        p.params.push((name.to_string(), value.to_string()));
                    }
                    ("measure", "bytes_per_instance") => {
                        p.bytes_per_instance = Some(
                            value
                                .parse()
                                .ok()
                                .filter(|&b| b > 0)
                                .ok_or_else(|| parse_err(line, "bytes_per_instance must be a positive integer"))?,
                        )
                    }
                    ("measure", "counters") => {
                        p.counters = value
                            .split(',')
                            .map(|c| c.trim().to_string())
                            .filter(|c| !c.is_empty())
                            .collect()
                    }
                    ("measure", "transform") => {
                        p.transform = Some(value.parse().map_err(|e: Error| parse_err(line, e.to_string()))?)
                    }
                    (s, k) => {
                        let place = if s.is_empty() { "top level".to_string() } else { format!("[{s}]") };
                        return Err(parse_err(line, format!("unknown key `{k}` at {place}")));
                    }
                }
            }
        }
    }
    p.clause = clause_lines.join(" ");
    if p.name.is_empty() {
        return Err(parse_err(1, "missing `name = ...`"));
    }
    if p.spaces.is_empty() {
        return Err(parse_err(1, "no data spaces declared"));
    }
    cross_reference(&p)?;
    Ok(p)
}

fn cross_reference(p: &PatternSpec) -> Result<()> {
    for m in &p.mappings {
        let at = p.location(&format!("mapping:{}", m.name));
        let mut any = false;
        for (id, next) in identifiers(&m.body) {
            if next == Some('[') {
                if p.space(id).is_none() && !m.params.iter().any(|x| x == id) {
                    return Err(Error::DanglingReference {
                        name: id.to_string(),
                        at,
                    });
                }
                any = true;
            }
        }
        if !any {
            return Err(parse_err(at.line, format!("mapping `{}` does not index a data space", m.name)));
        }
    }
    for s in &p.statements {
        let at = p.location(&format!("statement:{}", s.name));
        for (id, next) in identifiers(&s.body) {
            if next == Some('(') && p.mapping(id).is_none() && !BUILTIN_CALLS.contains(&id) {
                return Err(Error::DanglingReference {
                    name: id.to_string(),
                    at,
                });
            }
        }
    }
    let families: BTreeSet<&str> = p.statements_with(Role::Run).map(|s| s.family()).collect();
    if families.len() != 1 {
        return Err(parse_err(
            p.lines.get("section:statements").copied().unwrap_or(1),
            format!("expected exactly one run statement family, found {families:?}"),
        ));
    }
    if p.statements_with(Role::Val).next().is_none() {
        return Err(Error::MissingValidation(p.name.clone()));
    }
    for role in [Role::Init, Role::Run, Role::Val] {
        check_schedule(p, role)?;
    }
    Ok(())
}

fn line_of(text: &str, name: &str) -> usize {
    text.lines().position(|l| l.contains(name)).map_or(1, |i| i + 1)
}

/// Every statement a schedule calls exists, has this role and the right arity.
fn check_schedule(p: &PatternSpec, role: Role) -> Result<()> {
    let sched = p.schedules.get(role);
    let loc = |name: &str| Location {
        file: sched.file().to_string(),
        line: line_of(sched.text(), name),
    };
    let mut calls: Vec<(String, Option<usize>)> = Vec::new();
    match sched {
        Schedule::Script { file, text } => {
            let script = parse_script::<i64>(text).map_err(|e| Error::model(file.clone(), e))?;
            let value = script.evaluate().map_err(|e| Error::model(file.clone(), e))?;
            match value {
                Value::Set(s) => {
                    for piece in s.pieces() {
                        let name = piece.tuple_name().unwrap_or("S").to_string();
                        calls.push((name, Some(piece.arity())));
                    }
                }
                Value::Map(m) => {
                    for piece in m.pieces() {
                        let name = piece.space.input.name.clone().unwrap_or_else(|| "S".into());
                        calls.push((name, Some(piece.n_in())));
                    }
                }
            }
        }
        Schedule::RawC { text, .. } => {
            for (id, next) in identifiers(text) {
                if next == Some('(') && Role::of_name(id).is_some() {
                    calls.push((id.to_string(), None));
                }
            }
        }
    }
    for (name, arity) in calls {
        let stmt = p.statement(&name).ok_or_else(|| Error::DanglingReference {
            name: name.clone(),
            at: loc(&name),
        })?;
        if stmt.role != role {
            return Err(Error::Parse {
                at: loc(&name),
                message: format!("`{name}` is not a{} statement", role.suffix()),
            });
        }
        if let Some(a) = arity.filter(|&a| a != stmt.arity()) {
            return Err(Error::Parse {
                at: loc(&name),
                message: format!("`{name}` takes {} iterators but the schedule has {a}", stmt.arity()),
            });
        }
    }
    Ok(())
}

fn read_schedule(dir: &Path, role: Role) -> Result<Option<Schedule>> {
    let stem = role.file_stem();
    let mut found = Vec::new();
    for ext in ["pset", "c"] {
        let file = format!("{stem}.{ext}");
        let path = dir.join(&file);
        if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            found.push(if ext == "pset" {
                Schedule::Script { file, text }
            } else {
                Schedule::RawC { file, text }
            });
        }
    }
    if found.len() > 1 {
        return Err(Error::Parse {
            at: Location {
                file: format!("{stem}.pset"),
                line: 1,
            },
            message: format!("both {stem}.pset and {stem}.c exist"),
        });
    }
    Ok(found.pop())
}

/// Loads and cross-checks a pattern directory.
pub fn load_pattern(dir: &Path) -> Result<PatternSpec> {
    let spec = dir.join("kernel.spec");
    if !spec.is_file() {
        return Err(Error::MissingFile(spec));
    }
    let text = fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
    let init = read_schedule(dir, Role::Init)?.ok_or_else(|| Error::MissingFile(dir.join("init.pset")))?;
    let run = read_schedule(dir, Role::Run)?.ok_or_else(|| Error::MissingFile(dir.join("run.pset")))?;
    let Some(val) = read_schedule(dir, Role::Val)? else {
        let name = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("name").and_then(|r| r.trim().strip_prefix('=')))
            .map_or_else(|| dir.display().to_string(), |n| n.trim().to_string());
        return Err(Error::MissingValidation(name));
    };
    parse_kernel_spec(&text, Schedules { init, run, val })
}

/// Writes `kernel.spec` and the schedule files into `dir`.
pub fn save_pattern(p: &PatternSpec, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![("kernel.spec".to_string(), p.to_kernel_spec())];
    for role in [Role::Init, Role::Run, Role::Val] {
        let s = p.schedules.get(role);
        files.push((s.file().to_string(), s.text().to_string()));
    }
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
