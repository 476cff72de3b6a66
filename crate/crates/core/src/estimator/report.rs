//! Estimate report: one line per node,
//! `r,lambda,kkt_residual,iterations,signed_support,a_0,...,a_{p-1}`.

use serde::{Deserialize, Serialize};

use crate::dynamics::io::fmt_real;
use crate::error::{Error, Result};

use super::lasso::{signed_support_string, RowEstimate};

pub const REPORT_HEADER: &str = "r,lambda,kkt_residual,iterations,signed_support,a_hat";

/// Reduced view of one row as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub r: usize,
    pub lambda: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub signed_support: String,
    pub a_hat: Vec<f64>,
}

impl From<&RowEstimate> for ReportRow {
    fn from(e: &RowEstimate) -> Self {
        Self {
            r: e.row,
            lambda: e.lambda,
            kkt_residual: e.kkt_residual,
            iterations: e.iterations,
            signed_support: signed_support_string(&e.signed_support),
            a_hat: e.a_hat.clone(),
        }
    }
}

pub fn report_rows<'a>(estimates: impl IntoIterator<Item = &'a RowEstimate>) -> Vec<ReportRow> {
    estimates.into_iter().map(ReportRow::from).collect()
}

pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        let mut fields = vec![
            row.r.to_string(),
            fmt_real(row.lambda),
            fmt_real(row.kkt_residual),
            row.iterations.to_string(),
            row.signed_support.clone(),
        ];
        fields.extend(row.a_hat.iter().map(|&v| fmt_real(v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn report_from_csv(s: &str) -> Result<Vec<ReportRow>> {
    let mut lines = s.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{REPORT_HEADER}`") }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 5 {
            return Err(err("too few fields".into()));
        }
        let real = |v: &str| v.trim().parse::<f64>().map_err(|e| err(format!("{v}: {e}")));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|e| err(format!("{v}: {e}")));
        let support = f[4].trim().to_string();
        let a_hat = f[5..].iter().map(|v| real(v)).collect::<Result<Vec<_>>>()?;
        if support.chars().count() != a_hat.len() {
            return Err(err("support length differs from coefficient count".into()));
        }
        rows.push(ReportRow {
            r: int(f[0])?,
            lambda: real(f[1])?,
            kkt_residual: real(f[2])?,
            iterations: int(f[3])?,
            signed_support: support,
            a_hat,
        });
    }
    Ok(rows)
}

pub fn report_to_json(rows: &[ReportRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}
