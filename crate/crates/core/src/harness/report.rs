use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Format};
use super::run::{ExperimentResult, Outcome, Verdict};
use crate::error::Result;
use crate::shatter::{DimensionResult, SearchStatus};

pub const CSV_HEADER: [&str; 6] = ["class", "params", "quantity", "value", "bound", "verdict"];

pub fn to_json(result: &ExperimentResult) -> Result<String> {
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    Ok(text)
}

fn dim_status(d: &DimensionResult) -> &'static str {
    match d.status {
        SearchStatus::Exact => "exact",
        SearchStatus::LowerBound => "lower_bound",
    }
}

fn outcome_row<T>(out: &Outcome<T>, f: impl Fn(&T) -> (String, &'static str)) -> (String, String) {
    match out {
        Outcome::Done { value } => {
            let (v, status) = f(value);
            (v, status.to_string())
        }
        Outcome::Capped { .. } => (String::new(), "inconclusive".into()),
        Outcome::Skipped { .. } => (String::new(), "skipped".into()),
    }
}

/// One row per task output and per check: `quantity, value, bound, verdict`.
pub fn csv_rows(result: &ExperimentResult) -> Vec<[String; 4]> {
    let out = &result.outputs;
    let mut rows = Vec::new();
    let mut push = |q: &str, (v, verdict): (String, String)| rows.push([q.to_string(), v, String::new(), verdict]);
    let dim = |d: &DimensionResult| (d.dim.to_string(), dim_status(d));
    if let Some(o) = &out.natarajan {
        push("d_N", outcome_row(o, dim));
    }
    if let Some(o) = &out.graph {
        push("d_G", outcome_row(o, dim));
    }
    if let Some(o) = &out.vc {
        push("d_VC", outcome_row(o, dim));
    }
    if let Some(o) = &out.growth {
        push(
            "growth_count",
            outcome_row(o, |g| (g.count.to_string(), if g.exhaustive { "exact" } else { "lower_bound" })),
        );
    }
    if let Some(o) = &out.bounds {
        push("max_N", outcome_row(o, |b| (b.max_n.to_string(), "exact")));
    }
    if let Some(o) = &out.signs {
        push("sign_configs", outcome_row(o, |s| (s.result.count.to_string(), "lower_bound")));
    }
    for c in &result.checks {
        rows.push([
            format!("{} <= {}", c.quantity, c.bound_quantity),
            c.value.map(|v| v.to_string()).unwrap_or_default(),
            c.bound.clone(),
            verdict_text(c.verdict).to_string(),
        ]);
    }
    rows
}

pub fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub(crate) fn class_columns(config: &ExperimentConfig) -> (String, String) {
    match &config.class {
        Some(c) => (c.kind().to_string(), c.params()),
        None if config.signs.is_some() => ("polynomials".to_string(), String::new()),
        None => (String::new(), String::new()),
    }
}

pub fn write_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let (class, params) = class_columns(&result.config);
    for [q, v, b, verdict] in csv_rows(result) {
        w.write_record([&class, &params, &q, &v, &b, &verdict])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes `result` in `format`.
pub fn render(result: &ExperimentResult, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => Ok(to_json(result)?.into_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, result)?;
            Ok(buf)
        }
    }
}

/// Writes `<dir>/<name>.<json|csv>` and returns the path.
pub fn emit_report(result: &ExperimentResult, dir: &Path, format: Format) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let path = dir.join(format!("{}.{ext}", result.name));
    fs::write(&path, render(result, format)?)?;
    Ok(path)
}

