//! Working-set sizes spanning the cache hierarchy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{MachineDesc, Scope};
use crate::pattern::{Extent, PatternSpec};

/// Name of the band past the last cache level.
pub const DRAM: &str = "DRAM";

/// Bytes a configuration touches as a function of `n` and the thread count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Footprint {
    /// Element size, extents and padding of each data space.
    pub spaces: Vec<(u64, Vec<Extent>, u64)>,
    /// Every thread owns a copy (independent data spaces).
    pub privatized: bool,
}

impl Footprint {
    pub fn of_pattern(p: &PatternSpec, privatized: bool) -> Self {
        Footprint {
            spaces: p
                .spaces
                .iter()
                .map(|s| (s.element.size(), s.extents.clone(), s.padding))
                .collect(),
            privatized,
        }
    }

    /// `bytes * n`, a shared single-stream model.
    pub fn linear(bytes: u64) -> Self {
        Footprint {
            spaces: vec![(
                bytes,
                vec![Extent {
                    n: 1,
                    t: 0,
                    constant: 0,
                }],
                1,
            )],
            privatized: false,
        }
    }

    /// Bytes of one thread's copy (padding included), or of the shared data.
    pub fn per_copy(&self, n: u64, t: u64) -> u64 {
        self.spaces
            .iter()
            .map(|(size, extents, pad)| {
                let elems: u64 = extents.iter().map(|e| e.eval(n, t).max(0) as u64).product();
                let pad = if self.privatized { *pad } else { 1 };
                size * elems * pad
            })
            .sum()
    }

    pub fn total(&self, n: u64, t: u64) -> u64 {
        if self.privatized {
            self.per_copy(n, t) * t
        } else {
            self.per_copy(n, t)
        }
    }

    /// Bytes one cache of `scope` has to hold.
    pub fn share(&self, n: u64, t: u64, scope: Scope) -> u64 {
        match (scope, self.privatized) {
            (Scope::Domain, _) => self.total(n, t),
            (Scope::Core, true) => self.per_copy(n, t),
            (Scope::Core, false) => self.total(n, t).div_ceil(t.max(1)),
        }
    }
}

/// Index of the first level whose capacity holds the footprint; the level
/// count means DRAM.
pub fn band_index(m: &MachineDesc, fp: &Footprint, n: u64, t: u64) -> usize {
    m.levels
        .iter()
        .position(|l| fp.share(n, t, l.scope) <= l.capacity)
        .unwrap_or(m.levels.len())
}

pub fn band_name(m: &MachineDesc, i: usize) -> String {
    m.levels.get(i).map_or_else(|| DRAM.to_string(), |l| l.name.clone())
}

pub fn band(m: &MachineDesc, fp: &Footprint, n: u64, t: u64) -> String {
    band_name(m, band_index(m, fp, n, t))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOptions {
    pub threads: u64,
    pub points_per_level: usize,
    /// Sizes to run instead of a planned ladder.
    pub explicit: Option<Vec<u64>>,
    /// Every planned n is a multiple of this.
    pub multiple_of: u64,
    pub min_n: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            threads: 1,
            points_per_level: 4,
            explicit: None,
            multiple_of: 1,
            min_n: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedSize {
    pub n: u64,
    pub band: String,
    pub working_set_bytes: u64,
}

/// Smallest `n` in `[lo, hi]` with `pred(n)`, assuming `pred` is monotone.
fn first_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if !pred(hi) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        if pred(mid) {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    Some(a)
}

/// `count` distinct integers spread geometrically over `[lo, hi]`, each
/// strictly inside its own sub-interval; every integer when the range is
/// too narrow.
fn spread(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    let width = hi - lo + 1;
    if width <= count as u64 {
        return (lo..=hi).collect();
    }
    let pick = |f: &dyn Fn(f64) -> f64| -> Vec<u64> {
        let mut v: Vec<u64> = (0..count)
            .map(|k| (f((k as f64 + 0.5) / count as f64).round() as u64).clamp(lo, hi))
            .collect();
        v.dedup();
        v
    };
    let (l, h) = (lo.max(1) as f64, hi as f64);
    let geo = pick(&|x| l * (h / l).powf(x));
    if geo.len() == count {
        return geo;
    }
    let lin = pick(&|x| lo as f64 + (hi - lo) as f64 * x);
    if lin.len() == count {
        return lin;
    }
    (0..count as u64).map(|k| lo + k * (width / count as u64)).collect()
}

/// Sizes from half of the first level to four times the last, with
/// `points_per_level` of them inside every non-empty band.
pub fn plan_sweep(m: &MachineDesc, fp: &Footprint, opts: &SweepOptions) -> Result<Vec<PlannedSize>> {
    let t = opts.threads.max(1);
    let planned = |n: u64| PlannedSize {
        n,
        band: band(m, fp, n, t),
        working_set_bytes: fp.total(n, t),
    };
    if let Some(sizes) = &opts.explicit {
        return Ok(sizes.iter().map(|&n| planned(n)).collect());
    }
    let step = opts.multiple_of.max(1);
    let min_k = opts.min_n.max(1).div_ceil(step);
    let l1 = &m.levels[0];
    let llc = m.llc();
    if band_index(m, fp, min_k * step, t) > 0 {
        return Err(Error::FootprintTooSmall {
            n: min_k * step,
            bytes: fp.share(min_k * step, t, l1.scope),
            level: l1.name.clone(),
            capacity: l1.capacity,
        });
    }
    let beyond = |k: u64| fp.share(k * step, t, llc.scope) > 4 * llc.capacity;
    let mut top = min_k.max(1);
    while !beyond(top) {
        top = top.checked_mul(2).ok_or_else(|| Error::BadConfig("footprint never exceeds the last level".into()))?;
    }
    let max_k = first_true(min_k, top, beyond).unwrap_or(top) - 1;
    let start = first_true(min_k, max_k, |k| fp.share(k * step, t, l1.scope) * 2 >= l1.capacity).unwrap_or(min_k);
    let mut out = Vec::new();
    for b in 0..=m.levels.len() {
        let lo = first_true(start, max_k, |k| band_index(m, fp, k * step, t) >= b);
        let Some(lo) = lo else { break };
        let hi = first_true(lo, max_k, |k| band_index(m, fp, k * step, t) > b).map_or(max_k, |k| k - 1);
        if hi < lo {
            continue;
        }
        out.extend(spread(lo, hi, opts.points_per_level).into_iter().map(|k| planned(k * step)));
    }
    Ok(out)
}
