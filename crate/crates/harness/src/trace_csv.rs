//! Long-format CSV traces.
//!
//! Header: `iter,residual,dist_to_limit,method,seed,limit_status`. Floats are
//! written as the shortest decimal that parses back to the same `f64` (at
//! most 17 significant digits), so parsing a written file reproduces every
//! value exactly. `dist_to_limit` is empty for iterations whose iterate was
//! not stored.

use std::io::Write;

use feaslift::algorithms::{IterationTrace, LimitStatus};

use crate::error::{HResult, HarnessError};

pub const HEADER: &str = "iter,residual,dist_to_limit,method,seed,limit_status";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub dist_to_limit: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub limit_status: LimitStatus,
}

fn status_str(s: LimitStatus) -> &'static str {
    match s {
        LimitStatus::Exact => "exact",
        LimitStatus::Approx => "approx",
    }
}

pub fn rows_from_trace(trace: &IterationTrace, method: &str, seed: u64) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            iter: r.iter,
            residual: r.residual,
            dist_to_limit: r.dist_to_limit,
            method: method.to_string(),
            seed,
            limit_status: trace.limit_status,
        })
        .collect()
}

pub fn write_rows<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        let dist = r.dist_to_limit.map(|d| format!("{d:e}")).unwrap_or_default();
        writeln!(w, "{},{:e},{},{},{},{}", r.iter, r.residual, dist, r.method, r.seed, status_str(r.limit_status))?;
    }
    Ok(())
}

pub fn to_csv_string(rows: &[TraceRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses a trace CSV; `iter` must strictly increase within each method.
pub fn parse_csv(text: &str) -> HResult<Vec<TraceRow>> {
    let bad = |line: usize, msg: String| HarnessError::Validation(format!("csv line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        Some((_, h)) => return Err(bad(1, format!("unexpected header `{h}`"))),
        None => return Err(HarnessError::Validation("csv is empty".into())),
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut last_iter: std::collections::HashMap<String, usize> = Default::default();
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(ln, format!("expected 6 fields, got {}", f.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, format!("not a float: `{s}`")));
        let iter = f[0].parse::<usize>().map_err(|_| bad(ln, format!("not an iteration index: `{}`", f[0])))?;
        let residual = float(f[1])?;
        let dist_to_limit = if f[2].is_empty() { None } else { Some(float(f[2])?) };
        let method = f[3].to_string();
        if method.is_empty() {
            return Err(bad(ln, "empty method label".into()));
        }
        let seed = f[4].parse::<u64>().map_err(|_| bad(ln, format!("not a seed: `{}`", f[4])))?;
        let limit_status = match f[5] {
            "exact" => LimitStatus::Exact,
            "approx" => LimitStatus::Approx,
            other => return Err(bad(ln, format!("limit_status must be exact or approx, got `{other}`"))),
        };
        if let Some(&prev) = last_iter.get(&method) {
            if iter <= prev {
                return Err(bad(ln, format!("iter {iter} does not increase after {prev} for `{method}`")));
            }
        }
        last_iter.insert(method.clone(), iter);
        rows.push(TraceRow { iter, residual, dist_to_limit, method, seed, limit_status });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, residual: f64, dist: Option<f64>) -> TraceRow {
        TraceRow { iter, residual, dist_to_limit: dist, method: "reduced[C]".into(), seed: 42, limit_status: LimitStatus::Exact }
    }

    #[test]
    fn round_trip_is_exact() {
        let awkward = [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, 1.7976931348623157e308, 0.0, 123456.789e-30];
        let rows: Vec<TraceRow> =
            awkward.iter().enumerate().map(|(i, &x)| row(i, x, if i % 2 == 0 { Some(x * 0.5) } else { None })).collect();
        let text = to_csv_string(&rows);
        assert_eq!(parse_csv(&text).unwrap(), rows);
        for line in text.lines().skip(1) {
            let mantissa = line.split(',').nth(1).unwrap().split('e').next().unwrap();
            assert!(mantissa.chars().filter(|c| c.is_ascii_digit()).count() <= 17);
        }
    }

    #[test]
    fn rejects_schema_violations() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("iter,residual,method\n").is_err());
        let ok = format!("{HEADER}\n0,1e0,,m,1,exact\n");
        assert_eq!(parse_csv(&ok).unwrap().len(), 1);
        for body in ["0,x,,m,1,exact", "0,1,,m,1,maybe", "0,1,,m,1", "0,1,,,1,exact"] {
            assert!(parse_csv(&format!("{HEADER}\n{body}\n")).is_err(), "{body}");
        }
        assert!(parse_csv(&format!("{HEADER}\n1,1,,m,1,exact\n1,1,,m,1,exact\n")).is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,1,,a,1,exact\n0,1,,b,1,exact\n")).is_ok());
    }
}
