//! Text serialisation of correctness logs.
//!
//! Two layouts share a versioned header line. The record form has one line
//! per (problem, iteration) and may hold several runs:
//!
//! ```text
//! # refdyn-log v1 records
//! # meta model=gpt-4o-mini
//! # run-meta verify-first prompt=verify-first
//! problem_id,iteration,correct,confidence,run_label
//! p0000,0,1,9,standard
//! p0000,1,0,,standard
//! ```
//!
//! The compact table form has one line per problem with a 0/1 string over
//! iterations and holds a single run:
//!
//! ```text
//! # refdyn-log v1 table
//! # meta model=o3-mini
//! p0000 11111
//! p0001 01111
//! ```
//!
//! Blank lines and other `#` lines are ignored. `# meta` applies to every run
//! in the file, `# run-meta <label>` to one run. A run's label is stored in
//! its metadata under `run`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::log::CorrectnessLog;

pub const MAGIC: &str = "refdyn-log";
pub const VERSION: u32 = 1;
const RECORD_COLUMNS: &str = "problem_id,iteration,correct,confidence,run_label";

#[derive(Debug, Error)]
pub enum LogFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invariant '{invariant}' violated: {detail}")]
    Schema { line: usize, invariant: &'static str, detail: String },
    #[error("cannot serialise log: {0}")]
    Write(String),
}

impl LogFileError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        LogFileError::Parse { line, message: message.into() }
    }

    fn schema(line: usize, invariant: &'static str, detail: impl Into<String>) -> Self {
        LogFileError::Schema { line, invariant, detail: detail.into() }
    }

    /// The input was readable but malformed or inconsistent.
    pub fn is_data_error(&self) -> bool {
        matches!(self, LogFileError::Parse { .. } | LogFileError::Schema { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Records,
    Table,
}

struct Cell {
    correct: bool,
    confidence: Option<f64>,
}

struct ProblemEntry {
    id: String,
    first_line: usize,
    cells: BTreeMap<usize, Cell>,
}

#[derive(Default)]
struct RunBuilder {
    label: String,
    first_line: usize,
    metadata: BTreeMap<String, String>,
    problems: Vec<ProblemEntry>,
    index: HashMap<String, usize>,
}

impl RunBuilder {
    fn problem(&mut self, id: &str, line: usize) -> &mut ProblemEntry {
        let idx = match self.index.get(id) {
            Some(&i) => i,
            None => {
                self.problems.push(ProblemEntry { id: id.to_string(), first_line: line, cells: BTreeMap::new() });
                self.index.insert(id.to_string(), self.problems.len() - 1);
                self.problems.len() - 1
            }
        };
        &mut self.problems[idx]
    }

    fn finish(self, global: &BTreeMap<String, String>) -> Result<CorrectnessLog, LogFileError> {
        if self.problems.is_empty() {
            return Err(LogFileError::schema(self.first_line, "N >= 1", format!("run '{}' has no problems", self.label)));
        }
        let width = self.problems[0].cells.len();
        let mut ids = Vec::with_capacity(self.problems.len());
        let mut rows = Vec::with_capacity(self.problems.len());
        let mut conf = Vec::with_capacity(self.problems.len());
        for p in self.problems {
            if let Some(missing) = first_gap(&p.cells) {
                return Err(LogFileError::schema(
                    p.first_line,
                    "iterations contiguous from 0",
                    format!("problem '{}' is missing iteration {missing}", p.id),
                ));
            }
            if p.cells.len() != width {
                return Err(LogFileError::schema(
                    p.first_line,
                    "rectangular log",
                    format!("problem '{}' has {} iteration(s), expected {width}", p.id, p.cells.len()),
                ));
            }
            ids.push(p.id);
            rows.push(p.cells.values().map(|c| c.correct).collect());
            conf.push(p.cells.values().map(|c| c.confidence).collect());
        }
        let mut log = CorrectnessLog::with_confidence(ids, rows, conf)
            .map_err(|e| LogFileError::schema(self.first_line, "valid correctness log", e.to_string()))?;
        log.metadata = global.clone();
        log.metadata.extend(self.metadata);
        if !self.label.is_empty() {
            log.metadata.insert("run".into(), self.label);
        }
        Ok(log)
    }
}

fn first_gap(cells: &BTreeMap<usize, Cell>) -> Option<usize> {
    cells.keys().enumerate().find(|(pos, &k)| *pos != k).map(|(pos, _)| pos)
}

fn parse_header(line_no: usize, line: &str) -> Result<Layout, LogFileError> {
    let rest = line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|l| l.strip_prefix(MAGIC))
        .ok_or_else(|| LogFileError::parse(line_no, format!("expected header '# {MAGIC} v{VERSION} records|table'")))?;
    let mut parts = rest.split_whitespace();
    let version = parts.next().and_then(|v| v.strip_prefix('v')).and_then(|v| v.parse::<u32>().ok());
    match version {
        Some(VERSION) => {}
        Some(v) => return Err(LogFileError::parse(line_no, format!("unsupported log version v{v} (this build reads v{VERSION})"))),
        None => return Err(LogFileError::parse(line_no, "header is missing a version such as 'v1'")),
    }
    match parts.next() {
        Some("records") | None => Ok(Layout::Records),
        Some("table") => Ok(Layout::Table),
        Some(other) => Err(LogFileError::parse(line_no, format!("unknown layout '{other}'"))),
    }
}

fn parse_key_value(line_no: usize, text: &str) -> Result<(String, String), LogFileError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| LogFileError::parse(line_no, format!("metadata '{text}' is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(LogFileError::parse(line_no, "metadata key is empty"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

fn parse_bit(line_no: usize, text: &str) -> Result<bool, LogFileError> {
    match text.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(LogFileError::parse(line_no, format!("correct must be 0 or 1, got '{other}'"))),
    }
}

/// Parses every run in a log file, in order of first appearance.
pub fn parse_logs(input: &str) -> Result<Vec<CorrectnessLog>, LogFileError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| LogFileError::parse(1, "empty input: expected a log header"))?;
    let layout = parse_header(header_line, header.trim())?;

    let mut global = BTreeMap::new();
    let mut runs: Vec<RunBuilder> = Vec::new();
    let mut run_meta: Vec<(usize, String, String, String)> = Vec::new();
    let mut saw_columns = false;

    for (line_no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(kv) = comment.strip_prefix("meta ") {
                let (k, v) = parse_key_value(line_no, kv)?;
                global.insert(k, v);
            } else if let Some(rest) = comment.strip_prefix("run-meta ") {
                let (label, kv) = rest
                    .trim()
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| LogFileError::parse(line_no, "run-meta needs '<run> key=value'"))?;
                let (k, v) = parse_key_value(line_no, kv)?;
                run_meta.push((line_no, label.to_string(), k, v));
            }
            continue;
        }
        match layout {
            Layout::Records => {
                if !saw_columns {
                    if line.replace(' ', "") != RECORD_COLUMNS {
                        return Err(LogFileError::parse(line_no, format!("expected column line '{RECORD_COLUMNS}'")));
                    }
                    saw_columns = true;
                    continue;
                }
                parse_record(line_no, line, &mut runs)?;
            }
            Layout::Table => parse_table_row(line_no, line, &mut runs)?,
        }
    }

    for (line_no, label, k, v) in run_meta {
        let run = runs
            .iter_mut()
            .find(|r| r.label == label)
            .ok_or_else(|| LogFileError::schema(line_no, "run-meta refers to a run", format!("no records for run '{label}'")))?;
        run.metadata.insert(k, v);
    }
    if runs.is_empty() {
        return Err(LogFileError::schema(header_line, "N >= 1", "log contains no records"));
    }
    runs.into_iter().map(|r| r.finish(&global)).collect()
}

fn run_for<'a>(runs: &'a mut Vec<RunBuilder>, label: &str, line_no: usize) -> &'a mut RunBuilder {
    match runs.iter().position(|r| r.label == label) {
        Some(i) => &mut runs[i],
        None => {
            runs.push(RunBuilder { label: label.to_string(), first_line: line_no, ..Default::default() });
            runs.last_mut().expect("just pushed")
        }
    }
}

fn parse_record(line_no: usize, line: &str, runs: &mut Vec<RunBuilder>) -> Result<(), LogFileError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(3..=5).contains(&fields.len()) {
        return Err(LogFileError::parse(
            line_no,
            format!("expected 3 to 5 comma-separated fields, got {}", fields.len()),
        ));
    }
    let id = fields[0];
    if id.is_empty() {
        return Err(LogFileError::parse(line_no, "problem_id is empty"));
    }
    let iteration: usize = fields[1]
        .parse()
        .map_err(|_| LogFileError::parse(line_no, format!("iteration must be a non-negative integer, got '{}'", fields[1])))?;
    let correct = parse_bit(line_no, fields[2])?;
    let confidence = match fields.get(3).copied().filter(|s| !s.is_empty()) {
        None => None,
        Some(s) => {
            let v: f64 = s.parse().map_err(|_| LogFileError::parse(line_no, format!("confidence '{s}' is not a number")))?;
            if !(1.0..=10.0).contains(&v) {
                return Err(LogFileError::schema(line_no, "confidence in [1, 10]", format!("got {v}")));
            }
            Some(v)
        }
    };
    let label = fields.get(4).copied().unwrap_or("");
    let problem = run_for(runs, label, line_no).problem(id, line_no);
    if problem.cells.insert(iteration, Cell { correct, confidence }).is_some() {
        return Err(LogFileError::schema(
            line_no,
            "(problem_id, run_label, iteration) unique",
            format!("duplicate record for problem '{id}', run '{label}', iteration {iteration}"),
        ));
    }
    Ok(())
}

fn parse_table_row(line_no: usize, line: &str, runs: &mut Vec<RunBuilder>) -> Result<(), LogFileError> {
    let mut parts = line.split_whitespace();
    let id = parts.next().expect("non-empty line");
    let bits = parts
        .next()
        .ok_or_else(|| LogFileError::parse(line_no, format!("problem '{id}' has no correctness string")))?;
    if parts.next().is_some() {
        return Err(LogFileError::parse(line_no, "expected '<problem_id> <0/1 string>'"));
    }
    let run = run_for(runs, "", line_no);
    if run.index.contains_key(id) {
        return Err(LogFileError::schema(line_no, "(problem_id, run_label, iteration) unique", format!("problem '{id}' listed twice")));
    }
    let problem = run.problem(id, line_no);
    for (k, ch) in bits.chars().enumerate() {
        let correct = match ch {
            '1' => true,
            '0' => false,
            other => return Err(LogFileError::parse(line_no, format!("correctness string has '{other}', expected 0 or 1"))),
        };
        problem.cells.insert(k, Cell { correct, confidence: None });
    }
    Ok(())
}

/// Parses a file that must hold exactly one run.
pub fn parse_log(input: &str) -> Result<CorrectnessLog, LogFileError> {
    let mut logs = parse_logs(input)?;
    if logs.len() != 1 {
        let labels: Vec<_> = logs.iter().map(|l| l.run_label().unwrap_or("").to_string()).collect();
        return Err(LogFileError::schema(1, "single run", format!("file holds {} runs: {}", logs.len(), labels.join(", "))));
    }
    Ok(logs.remove(0))
}

pub fn read_logs(path: impl AsRef<Path>) -> Result<Vec<CorrectnessLog>, LogFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| LogFileError::Io { path: path.display().to_string(), source })?;
    parse_logs(&text)
}

fn check_token(what: &str, s: &str, allow_empty: bool) -> Result<(), LogFileError> {
    if (!allow_empty && s.is_empty()) || s.starts_with('#') || s.contains(|c: char| c == ',' || c.is_whitespace()) {
        return Err(LogFileError::Write(format!(
            "{what} '{s}' must be non-empty, must not start with '#' and must not contain commas or whitespace"
        )));
    }
    Ok(())
}

fn check_meta(k: &str, v: &str) -> Result<(), LogFileError> {
    if k.is_empty() || k.contains(|c: char| c == '=' || c.is_whitespace()) {
        return Err(LogFileError::Write(format!("metadata key '{k}' must be a non-empty word without '='")));
    }
    if v.contains(['\n', '\r']) || v != v.trim() {
        return Err(LogFileError::Write(format!("metadata value for '{k}' must be a single trimmed line")));
    }
    Ok(())
}

/// Writes one or more runs in the record layout.
///
/// Metadata is written per run; labels must be distinct across runs.
pub fn write_logs(logs: &[CorrectnessLog]) -> Result<String, LogFileError> {
    let mut out = format!("# {MAGIC} v{VERSION} records\n");
    let single = logs.len() == 1;
    let mut labels = Vec::new();
    for log in logs {
        let label = log.run_label().unwrap_or("");
        check_token("run label", label, true)?;
        if labels.contains(&label) {
            return Err(LogFileError::Write(format!("two runs share the label '{label}'")));
        }
        if !single && label.is_empty() {
            return Err(LogFileError::Write("every run in a multi-run file needs a run label".into()));
        }
        labels.push(label);
        for (k, v) in log.metadata.iter().filter(|(k, _)| k.as_str() != "run") {
            check_meta(k, v)?;
            if single {
                writeln!(out, "# meta {k}={v}").expect("string write");
            } else {
                writeln!(out, "# run-meta {label} {k}={v}").expect("string write");
            }
        }
    }
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for (log, label) in logs.iter().zip(&labels) {
        for ((id, row), conf) in log.problem_ids().iter().zip(log.rows()).zip(log.confidence_rows()) {
            check_token("problem id", id, false)?;
            for (k, (&c, g)) in row.iter().zip(conf).enumerate() {
                let g = g.map(|g| g.to_string()).unwrap_or_default();
                writeln!(out, "{id},{k},{},{g},{label}", c as u8).expect("string write");
            }
        }
    }
    Ok(out)
}

pub fn write_log(log: &CorrectnessLog) -> Result<String, LogFileError> {
    write_logs(std::slice::from_ref(log))
}

/// Compact one-line-per-problem layout. Confidence scores are not kept.
pub fn write_table(log: &CorrectnessLog) -> Result<String, LogFileError> {
    let mut out = format!("# {MAGIC} v{VERSION} table\n");
    for (k, v) in &log.metadata {
        check_meta(k, v)?;
        writeln!(out, "# meta {k}={v}").expect("string write");
    }
    for (id, row) in log.problem_ids().iter().zip(log.rows()) {
        check_token("problem id", id, false)?;
        let bits: String = row.iter().map(|&c| if c { '1' } else { '0' }).collect();
        writeln!(out, "{id} {bits}").expect("string write");
    }
    Ok(out)
}
