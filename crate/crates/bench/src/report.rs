//! Report formats: JSON lines, CSV and a plain table.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::RunRecord;
use crate::sweep::DRAM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Jsonl,
    Csv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            _ => Err(Error::BadConfig(format!("unknown format `{s}` (jsonl, csv, table)"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Jsonl => "jsonl",
            ReportFormat::Csv => "csv",
            ReportFormat::Table => "table",
        })
    }
}

/// Stable order: pattern, template, n, threads.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        let key = |r: &RunRecord| (r.config.pattern.clone(), r.config.template.to_string(), r.config.n, r.config.threads);
        key(a).cmp(&key(b))
    });
}

fn sorted(records: &[RunRecord]) -> Vec<RunRecord> {
    let mut v = records.to_vec();
    sort_records(&mut v);
    v
}

pub fn render_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in sorted(records) {
        out.push_str(&serde_json::to_string(&r).map_err(|e| Error::Report(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Report(format!("line {}: {e}", i + 1))))
        .collect()
}

const CSV_COLUMNS: [&str; 23] = [
    "schema_version",
    "pattern",
    "template",
    "transforms",
    "n",
    "threads",
    "ntimes",
    "warmup",
    "elapsed_seconds",
    "instances_executed",
    "bytes_per_instance",
    "bytes_counted",
    "bandwidth_bytes_per_second",
    "bandwidth_gbps",
    "working_set_bytes",
    "band",
    "validation",
    "threads_reported",
    "repeats",
    "elapsed_min",
    "elapsed_max",
    "timestamp",
    "host",
];

pub fn render_csv(records: &[RunRecord]) -> Result<String> {
    let records = sorted(records);
    let counters: BTreeSet<&str> = records.iter().flat_map(|r| r.counters.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend(counters.iter().map(|c| format!("counter.{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in &records {
        let c = &r.config;
        let transforms: Vec<String> = c.transforms.iter().map(|t| t.to_string()).collect();
        let rep = r.repeats.as_ref();
        let mut row = vec![
            r.schema_version.to_string(),
            c.pattern.clone(),
            c.template.to_string(),
            transforms.join(";"),
            c.n.to_string(),
            c.threads.to_string(),
            c.ntimes.to_string(),
            c.warmup.to_string(),
            r.elapsed_seconds.to_string(),
            r.instances_executed.to_string(),
            r.bytes_per_instance.to_string(),
            r.bytes_counted.to_string(),
            r.bandwidth_bytes_per_second.to_string(),
            r.bandwidth_gbps.to_string(),
            r.working_set_bytes.to_string(),
            r.band.clone(),
            r.validation.to_string(),
            r.threads_reported.to_string(),
            rep.map_or("1".into(), |s| s.count.to_string()),
            rep.map_or(r.elapsed_seconds, |s| s.min).to_string(),
            rep.map_or(r.elapsed_seconds, |s| s.max).to_string(),
            r.metadata.timestamp.clone(),
            r.metadata.host.clone(),
        ];
        row.extend(counters.iter().map(|k| r.counters.get(*k).map_or(String::new(), |v| v.to_string())));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Band names in hierarchy order: `L1`, `L2`, ... then DRAM.
fn band_key(band: &str) -> (u8, u64, String) {
    if band == DRAM {
        return (2, 0, String::new());
    }
    match band.strip_prefix('L').and_then(|d| d.parse::<u64>().ok()) {
        Some(level) => (0, level, String::new()),
        None => (1, 0, band.to_string()),
    }
}

pub fn render_table(records: &[RunRecord]) -> String {
    let mut records = sorted(records);
    records.sort_by_key(|r| band_key(&r.band));
    let header = ["pattern", "template", "n", "threads", "working set", "GB/s", "validation"];
    let rows: Vec<[String; 7]> = records
        .iter()
        .map(|r| {
            [
                r.config.pattern.clone(),
                r.config.template.to_string(),
                r.config.n.to_string(),
                r.config.threads.to_string(),
                r.working_set_bytes.to_string(),
                format!("{:.3}", r.bandwidth_gbps),
                if r.valid() { "pass".into() } else { "FAIL".into() },
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        format!("{}\n", parts.join("  ").trim_end())
    };
    let mut out = line(&header.map(String::from));
    let mut current: Option<&str> = None;
    for (r, row) in records.iter().zip(&rows) {
        if current != Some(r.band.as_str()) {
            current = Some(&r.band);
            out.push_str(&format!("-- {} --\n", r.band));
        }
        out.push_str(&line(row));
    }
    out
}

pub fn render_report(records: &[RunRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Report("no records".into()));
    }
    match format {
        ReportFormat::Jsonl => render_jsonl(records),
        ReportFormat::Csv => render_csv(records),
        ReportFormat::Table => Ok(render_table(records)),
    }
}

pub fn write_report(records: &[RunRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(records, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text)
}
