//! Problem files and solve outputs.
//!
//! Problem documents are JSON: `{"p": int, "G": int, "W": [[[number]]],
//! "A": [[number]]}` with each `W_g` row-major. Numbers are written with 17
//! significant digits so a save/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cpc_core::{DMatrix, DVector, ProblemInstance, SolverReport};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Deserialize)]
struct InstanceDoc {
    p: usize,
    #[serde(rename = "G")]
    groups: usize,
    #[serde(rename = "W")]
    scatter: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "A")]
    weights: Vec<Vec<f64>>,
}

fn parse_error(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Parses a problem document and checks its shape, without validating the
/// numeric invariants.
pub fn load_instance_unchecked(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_instance(path, &text)
}

fn parse_instance(path: &Path, text: &str) -> Result<ProblemInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| {
        parse_error(path, format!("malformed document at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let (p, groups) = (doc.p, doc.groups);
    if doc.scatter.len() != groups {
        return Err(parse_error(path, format!("G = {groups} but W holds {} matrices", doc.scatter.len())));
    }
    if doc.weights.len() != groups {
        return Err(parse_error(path, format!("G = {groups} but A holds {} vectors", doc.weights.len())));
    }
    let mut scatter = Vec::with_capacity(groups);
    for (g, rows) in doc.scatter.iter().enumerate() {
        if rows.len() != p {
            return Err(parse_error(path, format!("W[{g}] has {} rows, expected p = {p}", rows.len())));
        }
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != p) {
            return Err(parse_error(path, format!("W[{g}][{r}] has {} entries, expected p = {p}", row.len())));
        }
        scatter.push(DMatrix::from_fn(p, p, |r, c| rows[r][c]));
    }
    let mut weights = Vec::with_capacity(groups);
    for (g, a) in doc.weights.iter().enumerate() {
        if a.len() != p {
            return Err(parse_error(path, format!("A[{g}] has {} entries, expected p = {p}", a.len())));
        }
        weights.push(DVector::from_column_slice(a));
    }
    Ok(ProblemInstance::from_parts_unchecked(scatter, weights))
}

/// Reads, symmetrizes and validates a problem document.
pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let raw = load_instance_unchecked(path)?;
    let (scatter, weights) = (raw.scatter().to_vec(), raw.weights().to_vec());
    ProblemInstance::new(scatter, weights).map_err(|e| parse_error(path, e.to_string()))
}

fn number(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    let p = inst.dim();
    let mut out = String::new();
    let _ = write!(out, "{{\"p\": {p}, \"G\": {}, \"W\": [", inst.groups());
    for (g, w) in inst.scatter().iter().enumerate() {
        out.push_str(if g == 0 { "\n  [" } else { ",\n  [" });
        for r in 0..p {
            out.push_str(if r == 0 { "[" } else { ", [" });
            for c in 0..p {
                if c > 0 {
                    out.push_str(", ");
                }
                number(&mut out, w[(r, c)]);
            }
            out.push(']');
        }
        out.push(']');
    }
    out.push_str("\n], \"A\": [");
    for (g, a) in inst.weights().iter().enumerate() {
        out.push_str(if g == 0 { "\n  [" } else { ",\n  [" });
        for (i, x) in a.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            number(&mut out, *x);
        }
        out.push(']');
    }
    out.push_str("\n]}\n");
    out
}

pub fn save_instance(inst: &ProblemInstance, path: &Path) -> Result<()> {
    fs::write(path, instance_to_json(inst)).map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Serialize)]
struct SolveDoc<'a> {
    solver: &'a str,
    objective: f64,
    iterations: usize,
    converged: bool,
    stalled: bool,
    elapsed_seconds: f64,
    #[serde(rename = "final_D")]
    final_d: Vec<Vec<f64>>,
    objective_trace: &'a [f64],
}

/// JSON with the final `D` (row-major) and the objective trace.
pub fn save_report(report: &SolverReport, path: &Path) -> Result<()> {
    let d = report.final_d.as_matrix();
    let doc = SolveDoc {
        solver: report.solver.id(),
        objective: report.objective(),
        iterations: report.iterations,
        converged: report.converged,
        stalled: report.stalled,
        elapsed_seconds: report.elapsed_seconds,
        final_d: d.row_iter().map(|r| r.iter().copied().collect()).collect(),
        objective_trace: &report.objective_trace,
    };
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}
