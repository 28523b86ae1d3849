//! Curve CSV: `#` header lines followed by
//! `y,v,u,x,residual_abel,residual_lienard`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use crate::solvers::{Branch, SolutionCurve, TheoremId};
use crate::verify::ResidualReport;

use super::CliError;

pub const HEADER: &str = "y,v,u,x,residual_abel,residual_lienard";

/// Fixed 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn pieces_line(pieces: &[Range<usize>]) -> String {
    let parts: Vec<String> = pieces.iter().map(|p| format!("{}-{}", p.start, p.end - 1)).collect();
    parts.join(",")
}

pub fn report_line(name: &str, report: &ResidualReport) -> String {
    format!(
        "{name} max_rel={} rms_rel={} worst_at={} points={}",
        num(report.max_rel),
        num(report.rms_rel),
        num(report.worst_point),
        report.n_points
    )
}

/// Residual reports written into the header; a missing report is recorded
/// with its error message.
pub struct Residuals<'a> {
    pub abel: Result<&'a ResidualReport, String>,
    pub lienard: Result<&'a ResidualReport, String>,
    pub oracle: Result<&'a ResidualReport, String>,
}

pub fn write_curve(curve: &SolutionCurve, residuals: &Residuals<'_>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# theorem {}", curve.theorem);
    if let Some(b) = curve.branch {
        let _ = writeln!(out, "# branch {}", b.symbol());
    }
    for (name, value) in &curve.constants {
        let _ = writeln!(out, "# constant {name} = {}", num(*value));
    }
    for note in &curve.notes {
        let _ = writeln!(out, "# note {note}");
    }
    let _ = writeln!(out, "# pieces {}", pieces_line(&curve.pieces));
    for (name, r) in [("abel", &residuals.abel), ("lienard", &residuals.lienard), ("oracle", &residuals.oracle)] {
        match r {
            Ok(report) => {
                let _ = writeln!(out, "# residual {}", report_line(name, report));
            }
            Err(msg) => {
                let _ = writeln!(out, "# residual {name} unavailable: {msg}");
            }
        }
    }
    out.push_str(HEADER);
    out.push('\n');
    let pointwise = |r: &Result<&ResidualReport, String>, i: usize| match r {
        Ok(report) => report.pointwise[i],
        Err(_) => f64::NAN,
    };
    for i in 0..curve.len() {
        let v = curve.vs[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(curve.ys[i]),
            num(v),
            num(1.0 / v),
            num(curve.xs[i]),
            num(pointwise(&residuals.abel, i)),
            num(pointwise(&residuals.lienard, i)),
        );
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("curve line {line}: {msg}"))
}

fn parse_f64(line: usize, s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| bad(line, format!("not a number: `{s}`")))
}

fn parse_pieces(line: usize, s: &str, len: usize) -> Result<Vec<Range<usize>>, CliError> {
    let mut pieces = Vec::new();
    let mut next = 0;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part.split_once('-').ok_or_else(|| bad(line, format!("bad piece `{part}`")))?;
        let parse = |t: &str| t.parse::<usize>().map_err(|_| bad(line, format!("bad piece `{part}`")));
        let (a, b) = (parse(a)?, parse(b)?);
        if a != next || b < a {
            return Err(bad(line, format!("pieces must tile the samples in order, got `{part}`")));
        }
        pieces.push(a..b + 1);
        next = b + 1;
    }
    if next != len {
        return Err(bad(line, format!("pieces cover {next} of {len} samples")));
    }
    Ok(pieces)
}

/// Reads a curve written by [`write_curve`]. Residual columns are ignored.
pub fn read_curve(text: &str) -> Result<SolutionCurve, CliError> {
    let mut theorem = None;
    let mut branch = None;
    let mut constants = BTreeMap::new();
    let mut notes = Vec::new();
    let mut pieces_text = None;
    let mut seen_header = false;
    let (mut ys, mut vs, mut xs) = (Vec::new(), Vec::new(), Vec::new());

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            let (key, rest) = comment.split_once(' ').unwrap_or((comment, ""));
            match key {
                "theorem" => theorem = Some(rest.parse::<TheoremId>().map_err(|e| bad(line_no, e))?),
                "branch" => branch = Some(rest.parse::<Branch>().map_err(|e| bad(line_no, e))?),
                "constant" => {
                    let (name, value) = rest.split_once('=').ok_or_else(|| bad(line_no, "expected `name = value`"))?;
                    constants.insert(name.trim().to_string(), parse_f64(line_no, value)?);
                }
                "note" => notes.push(rest.to_string()),
                "pieces" => pieces_text = Some((line_no, rest.to_string())),
                _ => {}
            }
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(bad(line_no, format!("expected header `{HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(line_no, format!("expected 6 fields, got {}", fields.len())));
        }
        ys.push(parse_f64(line_no, fields[0])?);
        vs.push(parse_f64(line_no, fields[1])?);
        xs.push(parse_f64(line_no, fields[3])?);
    }

    if !seen_header {
        return Err(CliError::Input(format!("curve has no `{HEADER}` header")));
    }
    if ys.is_empty() {
        return Err(CliError::Input("curve has no samples".to_string()));
    }
    if let Some(i) = (0..ys.len()).find(|&i| !(ys[i].is_finite() && vs[i].is_finite() && xs[i].is_finite())) {
        return Err(CliError::Input(format!("curve sample {i} is not finite")));
    }
    let theorem = theorem.ok_or_else(|| CliError::Input("curve has no `# theorem` line".to_string()))?;
    let pieces = match pieces_text {
        Some((line_no, text)) => parse_pieces(line_no, &text, ys.len())?,
        None => vec![0..ys.len()],
    };
    Ok(SolutionCurve {
        theorem,
        ys,
        vs,
        xs,
        constants,
        branch,
        pieces,
        notes,
    })
}
