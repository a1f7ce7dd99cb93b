//! Cache hierarchy descriptions, from a file or from sysfs.
//!
//! Machine files are `key = value` lines with one `[name]` section per cache
//! level, innermost first:
//!
//! ```text
//! cores_per_domain = 14
//! domains = 2
//!
//! [L1]
//! capacity = 32K
//! line = 64
//! scope = core
//! ```

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Private to one core (and its SMT siblings).
    Core,
    /// Shared by every core of a domain.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheLevel {
    pub name: String,
    pub capacity: u64,
    pub line_size: u64,
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineDesc {
    pub levels: Vec<CacheLevel>,
    pub cores_per_domain: u64,
    pub domains: u64,
    /// False when the description is the built-in fallback.
    pub detected: bool,
}

fn level(name: &str, capacity: u64, scope: Scope) -> CacheLevel {
    CacheLevel {
        name: name.into(),
        capacity,
        line_size: 64,
        scope,
    }
}

impl MachineDesc {
    /// 32K / 256K / 32M with 64-byte lines, used when nothing can be read.
    pub fn fallback() -> Self {
        MachineDesc {
            levels: vec![
                level("L1", 32 << 10, Scope::Core),
                level("L2", 256 << 10, Scope::Core),
                level("L3", 32 << 20, Scope::Domain),
            ],
            cores_per_domain: 1,
            domains: 1,
            detected: false,
        }
    }

    pub fn llc(&self) -> &CacheLevel {
        self.levels.last().expect("machine has cache levels")
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        if self.levels.is_empty() {
            return Err("no cache levels".into());
        }
        for w in self.levels.windows(2) {
            if w[1].capacity <= w[0].capacity {
                return Err(format!("{} is not larger than {}", w[1].name, w[0].name));
            }
        }
        if let Some(l) = self.levels.iter().find(|l| l.line_size == 0) {
            return Err(format!("{} has a zero line size", l.name));
        }
        Ok(())
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            at: Location {
                file: file.into(),
                line,
            },
            message,
        };
        let mut m = MachineDesc {
            levels: Vec::new(),
            cores_per_domain: 1,
            domains: 1,
            detected: true,
        };
        let mut current: Option<(usize, CacheLevel)> = None;
        let mut finished = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                finished.extend(current.take());
                current = Some((line, level(name.trim(), 0, Scope::Core)));
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(line, "expected `key = value`".into()))?;
            match (&mut current, k) {
                (None, "cores_per_domain") => m.cores_per_domain = parse_count(v).ok_or_else(|| err(line, format!("bad count `{v}`")))?,
                (None, "domains") => m.domains = parse_count(v).ok_or_else(|| err(line, format!("bad count `{v}`")))?,
                (None, "detected") => m.detected = v == "true",
                (Some((_, l)), "capacity") => l.capacity = parse_size(v).ok_or_else(|| err(line, format!("bad size `{v}`")))?,
                (Some((_, l)), "line") => l.line_size = parse_size(v).ok_or_else(|| err(line, format!("bad size `{v}`")))?,
                (Some((_, l)), "scope") => {
                    l.scope = match v {
                        "core" => Scope::Core,
                        "domain" | "shared" => Scope::Domain,
                        _ => return Err(err(line, format!("scope must be core or domain, not `{v}`"))),
                    }
                }
                _ => return Err(err(line, format!("unknown key `{k}`"))),
            }
        }
        finished.extend(current);
        let first_line = finished.first().map_or(1, |(l, _)| *l);
        m.levels = finished.into_iter().map(|(_, l)| l).collect();
        m.check().map_err(|e| err(first_line, e))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

impl fmt::Display for MachineDesc {
    /// The machine-file form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cores_per_domain = {}", self.cores_per_domain)?;
        writeln!(f, "domains = {}", self.domains)?;
        if !self.detected {
            writeln!(f, "detected = false")?;
        }
        for l in &self.levels {
            let scope = match l.scope {
                Scope::Core => "core",
                Scope::Domain => "domain",
            };
            write!(f, "\n[{}]\ncapacity = {}\nline = {}\nscope = {scope}\n", l.name, format_size(l.capacity), l.line_size)?;
        }
        Ok(())
    }
}

fn parse_count(v: &str) -> Option<u64> {
    v.parse().ok().filter(|&c| c >= 1)
}

/// `32K`, `35M`, `1G` (binary multiples) or plain bytes.
pub fn parse_size(v: &str) -> Option<u64> {
    let v = v.trim();
    let v = v.strip_suffix('B').unwrap_or(v);
    let (digits, shift) = match v.chars().last()? {
        'K' | 'k' => (&v[..v.len() - 1], 10),
        'M' | 'm' => (&v[..v.len() - 1], 20),
        'G' | 'g' => (&v[..v.len() - 1], 30),
        _ => (v, 0),
    };
    digits.trim().parse::<u64>().ok().and_then(|d| d.checked_mul(1 << shift))
}

pub fn format_size(bytes: u64) -> String {
    for (shift, suffix) in [(30, "G"), (20, "M"), (10, "K")] {
        if bytes >= 1 << shift && bytes.is_multiple_of(1 << shift) {
            return format!("{}{suffix}", bytes >> shift);
        }
    }
    bytes.to_string()
}

/// Number of CPUs in a sysfs list such as `0-3,8-11`.
fn cpu_list_len(text: &str) -> u64 {
    text.trim()
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|r| match r.split_once('-') {
            Some((a, b)) => match (a.parse::<u64>(), b.parse::<u64>()) {
                (Ok(a), Ok(b)) if b >= a => b - a + 1,
                _ => 0,
            },
            None => 1,
        })
        .sum()
}

fn read_trim(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok().map(|s| s.trim().to_string())
}

/// Reads cache indices below `root` (normally `/sys/devices/system/cpu`).
pub fn detect_machine_at(root: &Path) -> Option<MachineDesc> {
    let cpu0 = root.join("cpu0");
    let siblings = read_trim(&cpu0.join("topology/thread_siblings_list")).map_or(1, |s| cpu_list_len(&s).max(1));
    let online = read_trim(&root.join("online")).map(|s| cpu_list_len(&s)).filter(|&c| c > 0);
    let mut found: Vec<(u64, CacheLevel, u64)> = Vec::new();
    for idx in 0.. {
        let dir = cpu0.join(format!("cache/index{idx}"));
        if !dir.is_dir() {
            break;
        }
        let kind = read_trim(&dir.join("type")).unwrap_or_default();
        if kind == "Instruction" {
            continue;
        }
        let lvl: u64 = read_trim(&dir.join("level"))?.parse().ok()?;
        let capacity = parse_size(&read_trim(&dir.join("size"))?)?;
        let line_size = read_trim(&dir.join("coherency_line_size")).and_then(|s| s.parse().ok()).unwrap_or(64);
        let sharing = read_trim(&dir.join("shared_cpu_list")).map_or(1, |s| cpu_list_len(&s).max(1));
        let scope = if sharing <= siblings { Scope::Core } else { Scope::Domain };
        found.push((
            lvl,
            CacheLevel {
                name: format!("L{lvl}"),
                capacity,
                line_size,
                scope,
            },
            sharing,
        ));
    }
    found.sort_by_key(|(l, _, _)| *l);
    found.dedup_by_key(|(l, _, _)| *l);
    let (_, _, llc_sharing) = found.last()?;
    let cores_per_domain = (llc_sharing / siblings).max(1);
    let domains = online.map_or(1, |c| (c / llc_sharing).max(1));
    let m = MachineDesc {
        levels: found.into_iter().map(|(_, l, _)| l).collect(),
        cores_per_domain,
        domains,
        detected: true,
    };
    m.check().ok().map(|_| m)
}

/// Best-effort detection; the fallback has `detected = false`.
pub fn detect_machine() -> MachineDesc {
    detect_machine_at(Path::new("/sys/devices/system/cpu")).unwrap_or_else(MachineDesc::fallback)
}

/// The explicit file when given, otherwise detection.
pub fn resolve_machine(file: Option<&Path>) -> Result<MachineDesc> {
    match file {
        Some(p) => MachineDesc::load(p),
        None => Ok(detect_machine()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("32K"), Some(32768));
        assert_eq!(parse_size("35M"), Some(36_700_160));
        assert_eq!(parse_size("64"), Some(64));
        assert_eq!(parse_size("1024KB"), Some(1 << 20));
        assert_eq!(parse_size("x"), None);
        assert_eq!(format_size(36_700_160), "35M");
        assert_eq!(format_size(100), "100");
    }

    #[test]
    fn file_round_trip() {
        let text = "cores_per_domain = 14\ndomains = 2\n\n[L1]\ncapacity = 32K\nline = 64\nscope = core\n\n\
                    [L2]\ncapacity = 256K\nline = 64\nscope = core\n\n[L3]\ncapacity = 35M\nline = 64\nscope = domain\n";
        let m = MachineDesc::parse(text, "r2").unwrap();
        assert_eq!(m.levels[2].capacity, 35 << 20);
        assert_eq!(m.levels[2].scope, Scope::Domain);
        assert_eq!(m.to_string(), text);
        assert_eq!(MachineDesc::parse(&m.to_string(), "again").unwrap(), m);
    }

    #[test]
    fn capacities_must_increase() {
        let text = "[L1]\ncapacity = 64K\n[L2]\ncapacity = 32K\n";
        assert!(matches!(MachineDesc::parse(text, "m"), Err(Error::Parse { .. })));
    }

    #[test]
    fn fallback_is_flagged() {
        let m = MachineDesc::fallback();
        assert!(!m.detected);
        assert_eq!(m.llc().capacity, 32 << 20);
        assert!(detect_machine_at(Path::new("/nonexistent")).is_none());
    }

    #[test]
    fn cpu_lists() {
        assert_eq!(cpu_list_len("0-3,8-11"), 8);
        assert_eq!(cpu_list_len("5"), 1);
        assert_eq!(cpu_list_len(""), 0);
    }
}
