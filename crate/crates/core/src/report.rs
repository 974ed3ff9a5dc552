//! Report rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::CellResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Json,
    TextTable,
}

pub fn emit_report(results: &[CellResult], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(results)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::TextTable => Ok(text_table(results)),
    }
}

/// Parses a JSON report produced by [`emit_report`].
pub fn parse_json_report(text: &str) -> Result<Vec<CellResult>> {
    Ok(serde_json::from_str(text)?)
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.1}%", 100.0 * x))
}

const HEADER: [&str; 13] =
    ["model", "cond", "n", "parse", "excl", "tier", "L", "Fp", "RBS", "TRIN", "ceiling", "AUROC2", "AUROC2 95% CI"];

/// Number of lines [`emit_report`] writes before the data rows.
pub fn text_header_lines(results: &[CellResult]) -> usize {
    2 + overrides(results).len()
}

fn overrides(results: &[CellResult]) -> Vec<String> {
    let mut all: Vec<String> = results.iter().flat_map(|r| r.protocol.non_default.iter().cloned()).collect();
    all.sort();
    all.dedup();
    all
}

fn text_table(results: &[CellResult]) -> String {
    let rows: Vec<[String; 13]> = results
        .iter()
        .map(|r| {
            let ix = &r.screening.indices;
            let auroc = r.metrics.auroc2.as_ref();
            let mut tier = r.screening.tier.to_string();
            if r.screening.trin_warning {
                tier.push('*');
            }
            [
                r.model_id.clone(),
                r.condition.to_string(),
                r.n_total.to_string(),
                pct(r.parse_rate),
                if r.excluded_by_parse_rate { "yes".into() } else { "no".into() },
                tier,
                fmt3(ix.l.value),
                fmt3(ix.fp.value),
                fmt3(ix.rbs.value),
                fmt3(ix.trin.value),
                pct(r.metrics.ceiling_rate),
                fmt3(auroc.map(|a| a.point)),
                auroc.map_or_else(
                    || "-".into(),
                    |a| format!("[{:.3}, {:.3}]{}", a.interval.lower, a.interval.upper, if a.flagged { " !" } else { "" }),
                ),
            ]
        })
        .collect();

    let mut widths = HEADER.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i < 2 || i == 5 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "{cell:>w$}");
            }
        }
        s.trim_end().to_string()
    };

    let mut out = String::new();
    for o in overrides(results) {
        let _ = writeln!(out, "# NON-DEFAULT THRESHOLD: {o}");
    }
    let header: Vec<String> = HEADER.iter().map(|h| h.to_string()).collect();
    out.push_str(&line(&header));
    out.push('\n');
    out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}
