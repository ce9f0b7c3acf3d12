//! CSV trace files.
//!
//! A trace starts with a `# scenario_hash=<hex>` line followed by a CSV
//! table holding one row per round and sensor. Sensor labels and retained
//! sender ids are 1-based. Floats use Rust's shortest round-trip form, so a
//! trace read back reproduces the simulated values bit for bit.

use std::io::{BufRead, Write};
use std::path::Path;

use rcta_core::rcta::Role;
use rcta_core::sim::{RoundTrace, Scenario};

use crate::error::CliError;

const HASH_PREFIX: &str = "# scenario_hash=";

pub fn header(d: usize) -> Vec<String> {
    let mut cols: Vec<String> = vec!["round".into(), "sensor".into(), "role".into()];
    cols.extend((1..=d).map(|l| format!("est_{l}")));
    cols.push("measurement".into());
    cols.push("delta".into());
    cols.extend((1..=d).map(|l| format!("err_{l}")));
    cols.push("err_norm".into());
    cols.extend((1..=d).map(|l| format!("m_{l}")));
    cols.extend((1..=d).map(|l| format!("retained_{l}")));
    cols
}

pub fn role_name(role: Role) -> &'static str {
    match role {
        Role::Normal => "normal",
        Role::Faulty => "faulty",
    }
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes the full trace table.
pub fn write_trace<W: Write>(
    mut out: W,
    scenario_hash: &str,
    scenario: &Scenario,
    traces: &[RoundTrace],
) -> Result<(), csv::Error> {
    writeln!(out, "{HASH_PREFIX}{scenario_hash}")?;
    let d = scenario.dim();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(d))?;
    for t in traces {
        for (i, sensor) in scenario.sensors.iter().enumerate() {
            let mut row: Vec<String> = vec![
                t.round.to_string(),
                (i + 1).to_string(),
                role_name(sensor.role()).to_string(),
            ];
            row.extend(t.estimates[i].iter().copied().map(float));
            row.push(optional(t.measurements[i]));
            row.push(optional(t.deltas[i]));
            row.extend(t.errors[i].iter().copied().map(float));
            row.push(float(t.error_norms[i]));
            row.extend(t.max_error.iter().copied().map(float));
            match &t.retained[i] {
                Some(per_coord) => row.extend(per_coord.iter().map(|ids| {
                    ids.iter()
                        .map(|j| (j + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })),
                None => row.extend((0..d).map(|_| String::new())),
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-round error norms, one column per sensor; faulty columns end in `_faulty`.
pub fn write_error_norms<W: Write>(
    out: W,
    scenario: &Scenario,
    traces: &[RoundTrace],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut cols = vec!["round".to_string()];
    for (i, sensor) in scenario.sensors.iter().enumerate() {
        cols.push(match sensor.role() {
            Role::Normal => format!("sensor_{}", i + 1),
            Role::Faulty => format!("sensor_{}_faulty", i + 1),
        });
    }
    w.write_record(&cols)?;
    for t in traces {
        let mut row = vec![t.round.to_string()];
        row.extend(t.error_norms.iter().copied().map(float));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// What `diagnose` needs from a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub scenario_hash: String,
    /// `m[k][l]` per round.
    pub max_error: Vec<Vec<f64>>,
}

pub fn read_trace(path: &Path) -> Result<TraceSummary, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace_from(std::io::BufReader::new(file), path)
}

pub fn read_trace_from<R: BufRead>(mut input: R, path: &Path) -> Result<TraceSummary, CliError> {
    let bad = |message: String| CliError::Trace {
        path: path.to_path_buf(),
        message,
    };
    let mut first = String::new();
    input.read_line(&mut first).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let scenario_hash = first
        .trim_end()
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| bad(format!("first line must start with {HASH_PREFIX:?}")))?
        .to_string();

    let mut reader = csv::Reader::from_reader(input);
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let m_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("m_"))
        .map(|(c, _)| c)
        .collect();
    if m_cols.is_empty() || headers.get(0) != Some("round") {
        return Err(bad("missing round or m_* columns".into()));
    }

    let mut max_error: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let round: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("row {}: bad round", line + 1)))?;
        let m = m_cols
            .iter()
            .map(|&c| record.get(c).and_then(|s| s.parse::<f64>().ok()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(format!("row {}: bad m value", line + 1)))?;
        match round.cmp(&max_error.len()) {
            std::cmp::Ordering::Equal => max_error.push(m),
            std::cmp::Ordering::Less if max_error[round] == m => {}
            _ => return Err(bad(format!("row {}: inconsistent round {round}", line + 1))),
        }
    }
    if max_error.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(TraceSummary {
        scenario_hash,
        max_error,
    })
}
