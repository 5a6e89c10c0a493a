//! Reports: checks with their bounds, and bit-stable JSON and CSV emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ bound`
    Le,
    /// `value < bound`
    Lt,
    /// `value ≥ bound`
    Ge,
    /// `value = bound`
    Eq,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Le => value <= bound,
            Relation::Lt => value < bound,
            Relation::Ge => value >= bound,
            Relation::Eq => value == bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Eq => "==",
        }
    }
}

/// How the ensemble behind a number was covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Exhaustive,
    Sampled,
}

/// One numeric claim with its bound and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub ensemble: Ensemble,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64, ensemble: Ensemble) -> Self {
        Check { name: name.into(), value, relation, bound, ensemble, pass: relation.holds(value, bound) }
    }

    /// Whether `pass` agrees with the recorded numbers.
    pub fn is_consistent(&self) -> bool {
        self.pass == self.relation.holds(self.value, self.bound)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} {} {} ({:?})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_float(self.value),
            self.relation.symbol(),
            fmt_float(self.bound),
            self.ensemble
        )
    }
}

/// One row of a security sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub base_code: String,
    pub d: usize,
    pub attack_weight: usize,
    pub samples: u64,
    pub eps_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
}

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 8] = ["base_code", "d", "attack_weight", "samples", "eps_hat", "ci_lo", "ci_hi", "bound"];

/// What a suite hands back.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    pub rows: Vec<SweepRow>,
}

impl SuiteOutput {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), HarnessError> {
        let v = serde_json::to_value(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
        self.data.insert(key.to_string(), v);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub data: BTreeMap<String, Value>,
    pub rows: Vec<SweepRow>,
    /// Kept out of the JSON so that replays are byte-identical; written to a sidecar file.
    #[serde(skip)]
    pub wall_clock: Option<Duration>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, out: SuiteOutput, wall_clock: Option<Duration>) -> Self {
        let pass = out.checks.iter().all(|c| c.pass);
        ExperimentReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            checks: out.checks,
            pass,
            data: out.data,
            rows: out.rows,
            wall_clock,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Serialize(e.to_string()))
    }
}

/// Floats print with 17 significant digits, which round-trips every `f64`.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // JSON has no infinities; callers never produce them in reports
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").expect("string write"),
            (None, Some(i), _) => write!(out, "{i}").expect("string write"),
            (None, None, Some(f)) => out.push_str(&fmt_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's map is ordered by key
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Canonical JSON: sorted keys, two-space indent, floats at 17 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    let v = serde_json::to_value(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Serialize(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.base_code.clone(),
            r.d.to_string(),
            r.attack_weight.to_string(),
            r.samples.to_string(),
            fmt_float(r.eps_hat),
            fmt_float(r.ci_lo),
            fmt_float(r.ci_hi),
            fmt_float(r.bound),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Serialize(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::Io { path: parent.to_path_buf(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Writes `<command>.json` or `<command>.csv` under `dir`. The JSON also gets a
/// `<command>.timing.json` sidecar when the wall clock is known. Returns the paths written.
pub fn emit_report(report: &ExperimentReport, format: Format, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let stem = report.config.command.name();
    match format {
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            write_file(&path, &to_canonical_json(report)?)?;
            let mut written = vec![path];
            if let Some(t) = report.wall_clock {
                let timing = dir.join(format!("{stem}.timing.json"));
                write_file(&timing, &to_canonical_json(&serde_json::json!({ "wall_clock_s": t.as_secs_f64() }))?)?;
                written.push(timing);
            }
            Ok(written)
        }
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            write_file(&path, &rows_to_csv(&report.rows)?)?;
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Command;

    fn sample() -> ExperimentReport {
        let mut out = SuiteOutput::default();
        out.check(Check::new("a", 0.1 + 0.2, Relation::Le, 0.3, Ensemble::Sampled));
        out.check(Check::new("b", 1.0 / 3.0, Relation::Ge, 0.25, Ensemble::Exhaustive));
        out.record("nested", &serde_json::json!({ "z": [1, 2.5e-300, -0.0], "a": "x\"y" })).unwrap();
        out.rows.push(SweepRow {
            base_code: "steane".into(),
            d: 3,
            attack_weight: 3,
            samples: 10,
            eps_hat: 0.1,
            ci_lo: 0.01,
            ci_hi: 0.4,
            bound: (2.0f64 / 3.0).powf(1.5),
        });
        ExperimentReport::new(ExperimentConfig::new(Command::TrapSecurity, 3), out, Some(Duration::from_millis(5)))
    }

    #[test]
    fn json_is_byte_stable_and_round_trips() {
        let r = sample();
        let a = to_canonical_json(&r).unwrap();
        assert_eq!(a, to_canonical_json(&r).unwrap());
        let back = ExperimentReport::from_json(&a).unwrap();
        assert_eq!(back, ExperimentReport { wall_clock: None, ..r.clone() });
        assert_eq!(to_canonical_json(&back).unwrap(), a);
        assert!(a.contains("3.0000000000000004e-1"), "{a}");
        assert!(!r.checks[0].pass && r.checks[1].pass);
        assert!(r.checks.iter().all(Check::is_consistent));
    }

    #[test]
    fn keys_are_sorted() {
        let a = to_canonical_json(&sample()).unwrap();
        let pos = |k: &str| a.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("checks") < pos("config") && pos("config") < pos("data") && pos("rows") < pos("version"));
    }

    #[test]
    fn csv_header_matches_schema() {
        let csv = rows_to_csv(&sample().rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "base_code,d,attack_weight,samples,eps_hat,ci_lo,ci_hi,bound");
        assert!(lines.next().unwrap().starts_with("steane,3,3,10,1.0000000000000001e-1,"));
    }
}
