//! Field-wise numeric comparison of two reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::report::CertificateReport;

/// Relative tolerance for fields without a declared error model.
pub const DEFAULT_DIFF_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub path: String,
    pub a: Value,
    pub b: Value,
    /// `|a − b|` for numbers, 0 or ∞ for other leaves.
    pub abs_diff: f64,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    pub operation: String,
    pub fields: Vec<FieldDiff>,
    pub all_within: bool,
    pub max_abs_diff: f64,
}

/// Compares the outputs of two reports of the same operation. Numbers agree
/// within `max(1e-9·scale, 4·grid_error)` when either report declares a
/// `grid_error` tolerance (the Richardson model: the change from `N` to
/// `2N` is about three times the estimated error at `N`), else within
/// `1e-9·scale`.
pub fn report_diff(a: &CertificateReport, b: &CertificateReport) -> Result<ReportDiff> {
    if a.operation != b.operation {
        return Err(Error::IncompatibleReports(format!(
            "operations differ: {} vs {}",
            a.operation, b.operation
        )));
    }
    let grid = |r: &CertificateReport| r.tolerances.get("grid_error").copied().unwrap_or(0.0);
    let grid_error = grid(a).max(grid(b));
    let mut fields = Vec::new();
    let keys: std::collections::BTreeSet<&String> = a.outputs.keys().chain(b.outputs.keys()).collect();
    for key in keys {
        let va = a.outputs.get(key).cloned().unwrap_or(Value::Null);
        let vb = b.outputs.get(key).cloned().unwrap_or(Value::Null);
        walk(key.clone(), &va, &vb, grid_error, &mut fields);
    }
    walk(
        "passed".into(),
        &Value::Bool(a.passed),
        &Value::Bool(b.passed),
        0.0,
        &mut fields,
    );
    let all_within = fields.iter().all(|f| f.within);
    let max_abs_diff = fields.iter().map(|f| f.abs_diff).fold(0.0, f64::max);
    Ok(ReportDiff {
        operation: a.operation.clone(),
        fields,
        all_within,
        max_abs_diff,
    })
}

fn walk(path: String, a: &Value, b: &Value, grid_error: f64, out: &mut Vec<FieldDiff>) {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let keys: std::collections::BTreeSet<&String> = ma.keys().chain(mb.keys()).collect();
            for k in keys {
                let null = Value::Null;
                walk(
                    format!("{path}.{k}"),
                    ma.get(k).unwrap_or(&null),
                    mb.get(k).unwrap_or(&null),
                    grid_error,
                    out,
                );
            }
        }
        (Value::Array(xa), Value::Array(xb)) if xa.len() == xb.len() => {
            for (i, (x, y)) in xa.iter().zip(xb).enumerate() {
                walk(format!("{path}[{i}]"), x, y, grid_error, out);
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            let abs_diff = (x - y).abs();
            let tolerance = (DEFAULT_DIFF_TOLERANCE * x.abs().max(y.abs()).max(1.0)).max(4.0 * grid_error);
            out.push(FieldDiff {
                path,
                a: a.clone(),
                b: b.clone(),
                abs_diff,
                tolerance,
                within: abs_diff <= tolerance || x == y,
            });
        }
        _ => {
            let same = a == b;
            out.push(FieldDiff {
                path,
                a: a.clone(),
                b: b.clone(),
                abs_diff: if same { 0.0 } else { f64::INFINITY },
                tolerance: 0.0,
                within: same,
            });
        }
    }
}
