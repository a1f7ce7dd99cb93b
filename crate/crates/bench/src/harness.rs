//! Running drivers and turning their output into records.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::driver::{TemplateKind, PROTOCOL_KEYS};
use crate::error::{Error, Result};
use crate::generate::Transform;

pub const SCHEMA_VERSION: u32 = 1;

/// OpenMP variables copied into every record.
pub const ENV_PASSTHROUGH: [&str; 3] = ["OMP_NUM_THREADS", "OMP_PROC_BIND", "OMP_PLACES"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pattern: String,
    pub template: TemplateKind,
    pub transforms: Vec<Transform>,
    pub n: u64,
    pub threads: u64,
    pub ntimes: u64,
    pub counters: Vec<String>,
    pub warmup: u64,
}

impl RunConfig {
    pub fn check(&self, min_n: u64) -> Result<()> {
        if self.n < min_n.max(1) {
            return Err(Error::BadConfig(format!("n = {} is below the pattern minimum {}", self.n, min_n.max(1))));
        }
        if self.threads == 0 || self.ntimes == 0 {
            return Err(Error::BadConfig("threads and ntimes must be at least 1".into()));
        }
        if let Some(t) = self.transforms.iter().find(|t| !self.n.is_multiple_of(t.size_multiple())) {
            return Err(Error::BadConfig(format!("{t} needs n to be a multiple of {}", t.size_multiple())));
        }
        if let Some(c) = self.counters.iter().find(|c| c.is_empty() || c.contains([',', '=']) || c.contains(char::is_whitespace)) {
            return Err(Error::BadConfig(format!("bad counter name `{c}`")));
        }
        Ok(())
    }

    /// The driver's argument vector.
    pub fn argv(&self) -> Vec<String> {
        let mut v = vec![self.n.to_string(), self.threads.to_string(), self.ntimes.to_string()];
        if !self.counters.is_empty() {
            v.push("--counters".into());
            v.push(self.counters.join(","));
        }
        v.push("--warmup".into());
        v.push(self.warmup.to_string());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    Pass,
    Fail,
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Validation::Pass => "pass",
            Validation::Fail => "fail",
        })
    }
}

/// A counter reading; serialized as an integer or the string `unsupported`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterValue {
    Count(u64),
    Unsupported,
}

impl fmt::Display for CounterValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterValue::Count(c) => write!(f, "{c}"),
            CounterValue::Unsupported => f.write_str("unsupported"),
        }
    }
}

impl CounterValue {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "unsupported" {
            Some(CounterValue::Unsupported)
        } else {
            s.parse().ok().map(CounterValue::Count)
        }
    }
}

impl Serialize for CounterValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CounterValue::Count(c) => s.serialize_u64(*c),
            CounterValue::Unsupported => s.serialize_str("unsupported"),
        }
    }
}

impl<'de> Deserialize<'de> for CounterValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(c) => Ok(CounterValue::Count(c)),
            Raw::Text(t) if t == "unsupported" => Ok(CounterValue::Unsupported),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad counter value `{t}`"))),
        }
    }
}

/// What a driver prints on stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverOutput {
    pub elapsed_seconds: f64,
    pub instances_executed: u64,
    pub validation: Validation,
    pub threads: u64,
    pub counters: BTreeMap<String, CounterValue>,
}

impl DriverOutput {
    pub fn parse_protocol(raw: &str) -> Result<Self> {
        let fail = |reason: String| Error::ProtocolParseError {
            reason,
            raw: raw.to_string(),
        };
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut counters = BTreeMap::new();
        for line in raw.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| fail(format!("`{line}` is not key=value")))?;
            if let Some(name) = k.strip_prefix("counter.") {
                let value = CounterValue::parse(v).ok_or_else(|| fail(format!("counter `{name}` has value `{v}`")))?;
                if name.is_empty() || counters.insert(name.to_string(), value).is_some() {
                    return Err(fail(format!("bad or repeated counter `{k}`")));
                }
            } else if !PROTOCOL_KEYS.contains(&k) {
                return Err(fail(format!("unknown key `{k}`")));
            } else if fields.insert(k, v).is_some() {
                return Err(fail(format!("repeated key `{k}`")));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| fail(format!("missing `{k}`")));
        let elapsed_seconds: f64 = get("elapsed_seconds")?.parse().map_err(|_| fail("elapsed_seconds is not a number".into()))?;
        if !(elapsed_seconds.is_finite() && elapsed_seconds > 0.0) {
            return Err(fail(format!("elapsed_seconds = {elapsed_seconds} is not positive")));
        }
        let instances_executed = get("instances_executed")?
            .parse()
            .map_err(|_| fail("instances_executed is not a count".into()))?;
        let validation = match get("validation")? {
            "pass" => Validation::Pass,
            "fail" => Validation::Fail,
            v => return Err(fail(format!("validation = `{v}`"))),
        };
        let threads = get("threads")?.parse().map_err(|_| fail("threads is not a count".into()))?;
        Ok(DriverOutput {
            elapsed_seconds,
            instances_executed,
            validation,
            threads,
            counters,
        })
    }

    pub fn to_protocol(&self) -> String {
        let mut s = format!(
            "elapsed_seconds={}\ninstances_executed={}\nvalidation={}\nthreads={}\n",
            self.elapsed_seconds, self.instances_executed, self.validation, self.threads
        );
        for (k, v) in &self.counters {
            s.push_str(&format!("counter.{k}={v}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatStats {
    pub count: u64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl RepeatStats {
    /// The median of an even count is the lower middle observation.
    pub fn of(times: &[f64]) -> Option<Self> {
        let mut v = times.to_vec();
        v.sort_by(f64::total_cmp);
        Some(RepeatStats {
            count: v.len() as u64,
            min: *v.first()?,
            median: v[(v.len() - 1) / 2],
            max: *v.last()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub timestamp: String,
    pub host: String,
    pub tool_version: String,
    pub toolchain_command: String,
    pub template_hash: String,
    pub pattern_hash: String,
    pub machine_detected: bool,
    pub environment: BTreeMap<String, String>,
    /// Where each effective setting came from: `cli`, `pattern` or `default`.
    pub config_sources: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: RunConfig,
    pub elapsed_seconds: f64,
    pub instances_executed: u64,
    pub bytes_per_instance: u64,
    pub bytes_counted: u64,
    pub bandwidth_bytes_per_second: f64,
    pub bandwidth_gbps: f64,
    pub working_set_bytes: u64,
    pub band: String,
    pub validation: Validation,
    pub threads_reported: u64,
    pub counters: BTreeMap<String, CounterValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<RepeatStats>,
    pub metadata: Metadata,
}

/// Everything about a run that is known before the driver starts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunContext {
    pub bytes_per_instance: u64,
    pub working_set_bytes: u64,
    pub band: String,
    pub toolchain_command: String,
    pub template_hash: String,
    pub pattern_hash: String,
    pub machine_detected: bool,
    pub config_sources: BTreeMap<String, String>,
}

fn host_name() -> String {
    ["/proc/sys/kernel/hostname", "/etc/hostname"]
        .iter()
        .find_map(|p| fs::read_to_string(p).ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()))
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "unknown".into())
}

impl Metadata {
    pub fn collect(ctx: &RunContext) -> Self {
        Metadata {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            host: host_name(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            toolchain_command: ctx.toolchain_command.clone(),
            template_hash: ctx.template_hash.clone(),
            pattern_hash: ctx.pattern_hash.clone(),
            machine_detected: ctx.machine_detected,
            environment: ENV_PASSTHROUGH
                .iter()
                .filter_map(|k| std::env::var(k).ok().map(|v| (k.to_string(), v)))
                .collect(),
            config_sources: ctx.config_sources.clone(),
        }
    }
}

impl RunRecord {
    pub fn from_output(config: RunConfig, out: &DriverOutput, ctx: &RunContext, metadata: Metadata) -> Self {
        let bytes_counted = ctx.bytes_per_instance * out.instances_executed;
        let bandwidth = bytes_counted as f64 / out.elapsed_seconds;
        RunRecord {
            schema_version: SCHEMA_VERSION,
            config,
            elapsed_seconds: out.elapsed_seconds,
            instances_executed: out.instances_executed,
            bytes_per_instance: ctx.bytes_per_instance,
            bytes_counted,
            bandwidth_bytes_per_second: bandwidth,
            bandwidth_gbps: bandwidth / 1e9,
            working_set_bytes: ctx.working_set_bytes,
            band: ctx.band.clone(),
            validation: out.validation,
            threads_reported: out.threads,
            counters: out.counters.clone(),
            repeats: None,
            metadata,
        }
    }

    pub fn valid(&self) -> bool {
        self.validation == Validation::Pass
    }

    /// Recomputes the derived fields from the stored ones.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.bytes_per_instance.checked_mul(self.instances_executed) != Some(self.bytes_counted) {
            return Err(format!(
                "bytes_counted {} != {} * {}",
                self.bytes_counted, self.bytes_per_instance, self.instances_executed
            ));
        }
        let bw = self.bytes_counted as f64 / self.elapsed_seconds;
        if bw != self.bandwidth_bytes_per_second {
            return Err(format!("bandwidth {} != {bw}", self.bandwidth_bytes_per_second));
        }
        if bw / 1e9 != self.bandwidth_gbps {
            return Err(format!("GB/s {} != {}", self.bandwidth_gbps, bw / 1e9));
        }
        Ok(())
    }
}

/// Runs the driver once and parses its stdout.
pub fn run_driver(exe: &Path, cfg: &RunConfig) -> Result<DriverOutput> {
    let out = Command::new(exe)
        .args(cfg.argv())
        .env("OMP_NUM_THREADS", cfg.threads.to_string())
        .output()
        .map_err(|e| Error::io(exe, e))?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let code = out.status.code();
    let crashed = || Error::DriverCrashed {
        status: out.status.to_string(),
        stderr: stderr.clone(),
    };
    if !matches!(code, Some(0) | Some(1)) || (code != Some(0) && stdout.trim().is_empty()) {
        return Err(crashed());
    }
    let parsed = DriverOutput::parse_protocol(&stdout)?;
    let expected = if code == Some(0) { Validation::Pass } else { Validation::Fail };
    if parsed.validation != expected {
        return Err(Error::ProtocolParseError {
            reason: format!("exit status {} disagrees with validation={}", out.status, parsed.validation),
            raw: stdout,
        });
    }
    Ok(parsed)
}

/// Runs the driver `repeats` times (at least once). The record keeps the
/// median time; a failed validation in any repeat marks it failed.
pub fn execute(exe: &Path, cfg: &RunConfig, ctx: &RunContext, repeats: u64) -> Result<RunRecord> {
    let mut outputs = Vec::new();
    for _ in 0..repeats.max(1) {
        outputs.push(run_driver(exe, cfg)?);
    }
    let times: Vec<f64> = outputs.iter().map(|o| o.elapsed_seconds).collect();
    let stats = RepeatStats::of(&times).expect("at least one run");
    let mut chosen = outputs
        .iter()
        .find(|o| o.elapsed_seconds == stats.median)
        .cloned()
        .expect("median is an observation");
    if outputs.iter().any(|o| o.validation == Validation::Fail) {
        chosen.validation = Validation::Fail;
    }
    if let Some(o) = outputs.iter().find(|o| o.instances_executed != chosen.instances_executed) {
        return Err(Error::ProtocolParseError {
            reason: "instance counts differ between repeats".into(),
            raw: o.to_protocol(),
        });
    }
    let mut record = RunRecord::from_output(cfg.clone(), &chosen, ctx, Metadata::collect(ctx));
    if outputs.len() > 1 {
        record.repeats = Some(stats);
    }
    Ok(record)
}
