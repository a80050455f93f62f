//! File formats: snapshot CSV ingestion/emission, result JSON, and the
//! benchmark record/summary files.
//!
//! Snapshot CSV layout: a header row whose first column is `t`, remaining
//! columns are real state components, one snapshot per row (the in-memory
//! matrix is the transpose of the file layout). Floats are written with
//! Rust's shortest round-trip formatting, so save/load is bit-exact.

use std::path::Path;

use faer::{c64, Mat};
use serde_json::{json, Value};

use crate::basis::TimeGrid;
use crate::diagnostics::TrialRecord;
use crate::dmd::DmdResult;
use crate::error::{Error, Result};
use crate::harness::CellSummary;
use crate::optdmd::SnapshotSet;
use crate::varpro::{SolveStatus, VarProSolution};

/// Schema tag written into result JSON files.
pub const RESULT_SCHEMA: &str = "optdmd-result-v1";
/// Schema tag written into benchmark summary JSON files.
pub const SUMMARY_SCHEMA: &str = "optdmd-bench-v1";

/// Reads a snapshot CSV (header `t,<state columns>`, strictly increasing
/// time column). Parse failures carry 1-based file line numbers.
pub fn load_snapshots_csv(path: impl AsRef<Path>) -> Result<SnapshotSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Parse {
                line: 0,
                msg: format!("cannot open {}: {e}", path.as_ref().display()),
            },
            _ => Error::Parse {
                line: 0,
                msg: e.to_string(),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("t") {
        return Err(Error::Parse {
            line: 1,
            msg: "first column must be named 't'".into(),
        });
    }
    let n_states = headers.len() - 1;
    if n_states == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "no state columns after 't'".into(),
        });
    }

    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let parse = |field: &str, what: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse {what} value '{field}'"),
            })
        };
        let t = parse(&record[0], "time")?;
        if !t.is_finite() {
            return Err(Error::Parse {
                line,
                msg: "non-finite time value".into(),
            });
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::NonMonotoneTime { position: line });
            }
        }
        let mut row = Vec::with_capacity(n_states);
        for i in 0..n_states {
            row.push(parse(&record[i + 1], "state")?);
        }
        times.push(t);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "file contains no snapshot rows".into(),
        });
    }

    let states = Mat::from_fn(n_states, rows.len(), |i, j| c64::new(rows[j][i], 0.0));
    SnapshotSet::new(states, TimeGrid::new(times)?)
}

/// Writes a snapshot set in the CSV layout read by
/// [`load_snapshots_csv`]. The states must be real (the format has no
/// imaginary columns).
pub fn save_snapshots_csv(data: &SnapshotSet, path: impl AsRef<Path>) -> Result<()> {
    let states = data.states();
    for j in 0..states.ncols() {
        for i in 0..states.nrows() {
            if states[(i, j)].im != 0.0 {
                return Err(Error::ShapeMismatch(
                    "snapshot CSV stores real states only".into(),
                ));
            }
        }
    }
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_io_error)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..states.nrows()).map(|i| format!("x{i}")));
    writer
        .write_record(&header)
        .map_err(csv_io_error)?;
    for j in 0..states.ncols() {
        let mut row = vec![format!("{}", data.grid().times()[j])];
        for i in 0..states.nrows() {
            row.push(format!("{}", states[(i, j)].re));
        }
        writer.write_record(&row).map_err(csv_io_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io_error(e: csv::Error) -> Error {
    Error::Parse {
        line: 0,
        msg: e.to_string(),
    }
}

fn complex_pair(z: &c64) -> Value {
    json!([z.re, z.im])
}

fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::Stalled => "stalled",
        SolveStatus::MaxIters => "max_iters",
    }
}

/// Result JSON: eigenvalues as `[re, im]` arrays, modes as row-major arrays
/// of `[re, im]` pairs, plus the solver summary when the method ran the
/// variable-projection loop.
pub fn result_to_json(result: &DmdResult, solution: Option<&VarProSolution>) -> Value {
    let modes: Vec<Vec<Value>> = (0..result.modes.nrows())
        .map(|i| {
            (0..result.modes.ncols())
                .map(|j| complex_pair(&result.modes[(i, j)]))
                .collect()
        })
        .collect();
    json!({
        "schema": RESULT_SCHEMA,
        "method": result.method.as_str(),
        "rank": result.rank(),
        "eigenvalues": result.eigenvalues.iter().map(complex_pair).collect::<Vec<_>>(),
        "modes": modes,
        "amplitudes": result.amplitudes,
        "residual_history": solution.map(|s| s.residual_history.clone()).unwrap_or_default(),
        "status": solution.map(|s| Value::from(status_str(s.status))).unwrap_or(Value::Null),
    })
}

/// Writes [`result_to_json`] to a file, pretty-printed.
pub fn save_result_json(
    result: &DmdResult,
    solution: Option<&VarProSolution>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let value = result_to_json(result, solution);
    std::fs::write(path, format!("{:#}\n", value))?;
    Ok(())
}

/// Parses a result JSON back into plain values (used to validate the
/// schema and for downstream tooling).
pub fn parse_result_json(text: &str) -> Result<(DmdResult, Vec<f64>, Option<String>)> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let schema = value["schema"].as_str().unwrap_or_default();
    if schema != RESULT_SCHEMA {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported schema '{schema}'"),
        });
    }
    let method: crate::dmd::Method = value["method"]
        .as_str()
        .unwrap_or_default()
        .parse()
        .map_err(|e: String| Error::Parse { line: 0, msg: e })?;
    let pair = |v: &Value, what: &str| -> Result<c64> {
        let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("{what} must be a [re, im] pair"),
        })?;
        Ok(c64::new(
            arr[0].as_f64().unwrap_or(f64::NAN),
            arr[1].as_f64().unwrap_or(f64::NAN),
        ))
    };
    let eigenvalues: Result<Vec<c64>> = value["eigenvalues"]
        .as_array()
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: "missing eigenvalues".into(),
        })?
        .iter()
        .map(|v| pair(v, "eigenvalue"))
        .collect();
    let eigenvalues = eigenvalues?;
    let mode_rows = value["modes"].as_array().ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing modes".into(),
    })?;
    let n = mode_rows.len();
    let r = eigenvalues.len();
    let mut modes = Mat::<c64>::zeros(n, r);
    for (i, row) in mode_rows.iter().enumerate() {
        let row = row.as_array().filter(|a| a.len() == r).ok_or_else(|| Error::Parse {
            line: 0,
            msg: "mode row length mismatch".into(),
        })?;
        for (j, v) in row.iter().enumerate() {
            modes[(i, j)] = pair(v, "mode entry")?;
        }
    }
    let amplitudes: Vec<f64> = value["amplitudes"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_f64()).collect())
        .unwrap_or_default();
    if amplitudes.len() != r {
        return Err(Error::Parse {
            line: 0,
            msg: "amplitudes length mismatch".into(),
        });
    }
    let residual_history: Vec<f64> = value["residual_history"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_f64()).collect())
        .unwrap_or_default();
    let status = value["status"].as_str().map(str::to_string);
    Ok((
        DmdResult {
            method,
            eigenvalues,
            discrete_eigs: None,
            modes,
            amplitudes,
        },
        residual_history,
        status,
    ))
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Renders benchmark records as CSV. `truth_len` fixes the number of
/// matched-eigenvalue columns. Wall times are deliberately left out so the
/// file is a pure function of (config, seed).
pub fn records_to_csv_string(records: &[TrialRecord], truth_len: usize) -> String {
    let mut out = String::new();
    out.push_str("method,m,sigma2,trial,seed,a_error,eig_error,recon_error,status");
    for i in 0..truth_len {
        out.push_str(&format!(",eig{i}_re,eig{i}_im"));
    }
    out.push('\n');
    for r in records {
        let status = match &r.failure {
            None => "ok".to_string(),
            Some(msg) => format!("error: {}", msg.replace([',', '\n'], ";")),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            r.m,
            r.sigma2,
            r.trial,
            r.seed,
            opt_field(r.a_error),
            opt_field(r.eig_error),
            opt_field(r.recon_error),
            status,
        ));
        for i in 0..truth_len {
            match r.matched_eigs.get(i) {
                Some(z) => out.push_str(&format!(",{},{}", z.re, z.im)),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes [`records_to_csv_string`] to a file.
pub fn save_records_csv(
    records: &[TrialRecord],
    truth_len: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, records_to_csv_string(records, truth_len))?;
    Ok(())
}

/// Per-trial wall times, kept separate from the deterministic outputs.
pub fn save_timings_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("method,m,sigma2,trial,wall_time\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method, r.m, r.sigma2, r.trial, r.wall_time
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn ellipse_to_json(e: &crate::diagnostics::EllipseSummary) -> Value {
    json!({
        "center": complex_pair(&e.center),
        "semi_major": e.semi_major,
        "semi_minor": e.semi_minor,
        "angle": e.angle,
    })
}

/// Aggregate JSON for a benchmark run: one entry per (method, m, σ²) cell
/// with means and per-eigenvalue statistics. Deterministic for a fixed
/// (config, seed); timing means are excluded for that reason.
pub fn summary_to_json(example: &str, seed: u64, cells: &[CellSummary]) -> Value {
    let cell_values: Vec<Value> = cells
        .iter()
        .map(|cell| {
            let eig_stats: Vec<Value> = cell
                .eig_stats
                .iter()
                .map(|s| {
                    json!({
                        "truth": complex_pair(&s.truth),
                        "mean": complex_pair(&s.mean),
                        "stderr": [s.stderr_re, s.stderr_im],
                        "ellipse95": s.ellipse95.as_ref().map(ellipse_to_json).unwrap_or(Value::Null),
                    })
                })
                .collect();
            json!({
                "method": cell.method.as_str(),
                "m": cell.m,
                "sigma2": cell.sigma2,
                "trials": cell.trials,
                "failures": cell.failures,
                "mean_a_error": cell.mean_a_error,
                "mean_eig_error": cell.mean_eig_error,
                "mean_recon_error": cell.mean_recon_error,
                "eigenvalues": eig_stats,
            })
        })
        .collect();
    json!({
        "schema": SUMMARY_SCHEMA,
        "example": example,
        "seed": seed,
        "cells": cell_values,
    })
}

/// Writes [`summary_to_json`] to a file, pretty-printed.
pub fn save_summary_json(
    example: &str,
    seed: u64,
    cells: &[CellSummary],
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, format!("{:#}\n", summary_to_json(example, seed, cells)))?;
    Ok(())
}
