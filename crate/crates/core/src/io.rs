//! Epoch CSV files, JSON reports and tab-separated plot data.
//!
//! Epoch files are named `task<T>_rep<R>.csv` with a `t,ch1,...,chN` header
//! and one row per sample; `t` is in seconds. Reports are JSON objects with
//! sorted keys, a top-level `"schema": 1` and every float written with 17
//! significant digits, so the same report always produces the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{Error, IngestIssue, Result};
use crate::pipeline::{Epoch, RecordingSet, SynergyLabel, SynergyReport};
use crate::tensor::Matrix;

pub const SCHEMA_VERSION: u64 = 1;

/// Relative tolerance when checking that all files share one sample rate.
const RATE_TOLERANCE: f64 = 0.01;

/// Parses `task<T>_rep<R>.csv`.
pub fn parse_epoch_name(name: &str) -> Option<(u32, u32)> {
    let stem = name.strip_suffix(".csv")?.strip_prefix("task")?;
    let (task, rep) = stem.split_once("_rep")?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(task) || !digits(rep) {
        return None;
    }
    Some((task.parse().ok()?, rep.parse().ok()?))
}

pub fn epoch_file_name(task: u32, rep: u32) -> String {
    format!("task{task}_rep{rep}.csv")
}

struct ParsedEpoch {
    task: u32,
    rep: u32,
    file: PathBuf,
    times: Vec<f64>,
    rows: Vec<f64>,
    channels: usize,
}

/// Reads one epoch file or every epoch file in a directory. All problems are
/// collected before failing, each tagged with its file and line.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<RecordingSet> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let mut issues = Vec::new();
    let mut files = Vec::new();
    if meta.is_dir() {
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            let p = entry.path();
            if p.extension().is_some_and(|e| e == "csv") && p.is_file() {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return Err(Error::NoEpochs(path.to_path_buf()));
    }

    let mut parsed = Vec::new();
    for file in &files {
        let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let Some((task, rep)) = parse_epoch_name(name) else {
            issues.push(IngestIssue {
                file: file.clone(),
                line: None,
                message: "file name does not match task<T>_rep<R>.csv".into(),
            });
            continue;
        };
        if let Some(p) = read_epoch(file, task, rep, &mut issues)? {
            parsed.push(p);
        }
    }

    if let Some(first) = parsed.first() {
        let expected = first.channels;
        for p in &parsed[1..] {
            if p.channels != expected {
                issues.push(IngestIssue {
                    file: p.file.clone(),
                    line: Some(1),
                    message: format!(
                        "{} channels, but {} has {expected}",
                        p.channels,
                        first.file.display()
                    ),
                });
            }
        }
    }
    let rate = infer_rate(&parsed, &mut issues);
    if !issues.is_empty() {
        return Err(Error::Ingest(issues));
    }
    let rate = rate.ok_or_else(|| {
        Error::Ingest(vec![IngestIssue {
            file: path.to_path_buf(),
            line: None,
            message: "cannot infer the sample rate: no file has two or more samples".into(),
        }])
    })?;
    let epochs = parsed
        .into_iter()
        .map(|p| {
            let rows = p.times.len();
            Ok(Epoch {
                task_id: p.task,
                repetition_id: p.rep,
                samples: Matrix::new(rows, p.channels, p.rows)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RecordingSet::new(epochs, rate)
}

fn read_epoch(file: &Path, task: u32, rep: u32, issues: &mut Vec<IngestIssue>) -> Result<Option<ParsedEpoch>> {
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    let issue = |line: u64, message: String| IngestIssue {
        file: file.to_path_buf(),
        line: Some(line),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => {
            issues.push(issue(1, "empty file".into()));
            return Ok(None);
        }
        Some(Err(e)) => {
            issues.push(issue(1, e.to_string()));
            return Ok(None);
        }
        Some(Ok(h)) => h,
    };
    let channels = header.len().saturating_sub(1);
    let header_ok = channels > 0
        && &header[0] == "t"
        && (1..=channels).all(|c| header[c] == *format!("ch{c}"));
    if !header_ok {
        issues.push(issue(1, format!("header must be t,ch1..chN, found {:?}", header.iter().collect::<Vec<_>>().join(","))));
        return Ok(None);
    }

    let before = issues.len();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for record in records {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                issues.push(issue(line, e.to_string()));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != channels + 1 {
            issues.push(issue(line, format!("expected {} fields, found {}", channels + 1, record.len())));
            continue;
        }
        let mut values = Vec::with_capacity(channels + 1);
        for (i, field) in record.iter().enumerate() {
            let column = if i == 0 { "t".to_string() } else { format!("ch{i}") };
            match field.parse::<f64>() {
                Ok(v) if !v.is_finite() => issues.push(issue(line, format!("{column}: non-finite value {field}"))),
                Ok(v) if i > 0 && v < 0.0 => issues.push(issue(line, format!("{column}: negative value {field}"))),
                Ok(v) => values.push(v),
                Err(_) => issues.push(issue(line, format!("{column}: not a number: {field:?}"))),
            }
        }
        if values.len() == channels + 1 {
            if let Some(&prev) = times.last() {
                if values[0] <= prev {
                    issues.push(issue(line, format!("time {} does not increase", values[0])));
                }
            }
            times.push(values[0]);
            rows.extend_from_slice(&values[1..]);
        }
    }
    if issues.len() > before {
        return Ok(None);
    }
    if times.is_empty() {
        issues.push(IngestIssue {
            file: file.to_path_buf(),
            line: None,
            message: "no samples".into(),
        });
        return Ok(None);
    }
    Ok(Some(ParsedEpoch {
        task,
        rep,
        file: file.to_path_buf(),
        times,
        rows,
        channels,
    }))
}

fn infer_rate(parsed: &[ParsedEpoch], issues: &mut Vec<IngestIssue>) -> Option<f64> {
    let mut reference: Option<(f64, &Path)> = None;
    for p in parsed {
        let n = p.times.len();
        if n < 2 {
            continue;
        }
        let rate = (n - 1) as f64 / (p.times[n - 1] - p.times[0]);
        match reference {
            None => reference = Some((rate, &p.file)),
            Some((r, f)) if (rate - r).abs() > RATE_TOLERANCE * r => issues.push(IngestIssue {
                file: p.file.clone(),
                line: None,
                message: format!("sample rate {rate:.3} Hz differs from {r:.3} Hz in {}", f.display()),
            }),
            _ => {}
        }
    }
    reference.map(|(r, _)| r)
}

/// Writes one `task<T>_rep<R>.csv` per epoch into `dir`, creating it if
/// needed. Values use the shortest round-trip representation, so reading the
/// files back gives identical samples.
pub fn write_epochs(rs: &RecordingSet, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for e in rs.epochs() {
        let path = dir.join(epoch_file_name(e.task_id, e.repetition_id));
        let mut out = String::from("t");
        for c in 1..=e.samples.cols() {
            out.push_str(&format!(",ch{c}"));
        }
        out.push('\n');
        for r in 0..e.samples.rows() {
            out.push_str(&format!("{}", r as f64 / rs.sample_rate()));
            for c in 0..e.samples.cols() {
                out.push_str(&format!(",{}", e.samples[(r, c)]));
            }
            out.push('\n');
        }
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Pretty JSON whose floats always carry 17 significant digits.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value as a schema-tagged, key-sorted JSON document.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Report(e.to_string()))?;
    match &mut v {
        Value::Object(map) => {
            map.insert("schema".into(), Value::from(SCHEMA_VERSION));
        }
        _ => return Err(Error::Report("top-level value must be an object".into())),
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    v.serialize(&mut ser).map_err(|e| Error::Report(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Parses a document written by [`to_json`], checking the schema version.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    let map = v
        .as_object_mut()
        .ok_or_else(|| Error::Report("expected a JSON object".into()))?;
    match map.remove("schema").and_then(|s| s.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(Error::Report(format!("unsupported schema {other}"))),
        None => return Err(Error::Report("missing schema version".into())),
    }
    serde_json::from_value(v).map_err(|e| Error::Report(e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

/// Writes the report to `path` plus two plot-data sidecars next to it:
/// `<stem>.synergies.tsv` (one row per channel, one column per synergy) and
/// `<stem>.temporal.tsv` (one row per sample, one column per component).
pub fn emit_report(report: &SynergyReport, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    write_json(report, path)?;
    let mut written = vec![path.to_path_buf()];
    let (synergies, temporal) = sidecar_paths(path);
    let labels = synergy_columns(report);
    let vectors: Vec<&[f64]> = report.synergies.iter().map(|s| s.vector.as_slice()).collect();
    write_tsv(&synergies, "channel", &labels, &vectors)?;
    written.push(synergies);
    let temporal_labels: Vec<String> = (1..=report.temporal.len()).map(|i| format!("component{i}")).collect();
    let profiles: Vec<&[f64]> = report.temporal.iter().map(Vec::as_slice).collect();
    write_tsv(&temporal, "sample", &temporal_labels, &profiles)?;
    written.push(temporal);
    Ok(written)
}

pub fn parse_report(text: &str) -> Result<SynergyReport> {
    from_json(text)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<SynergyReport> {
    let path = path.as_ref();
    parse_report(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn sidecar_paths(report: &Path) -> (PathBuf, PathBuf) {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    (
        report.with_file_name(format!("{stem}.synergies.tsv")),
        report.with_file_name(format!("{stem}.temporal.tsv")),
    )
}

/// Unique column names for the synergy sidecar, e.g. `shared_dof1`, `task2`.
pub fn synergy_columns(report: &SynergyReport) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    report
        .synergies
        .iter()
        .map(|s| {
            let mut name = s.label.short();
            if let (SynergyLabel::Shared, Some(d)) = (s.label, s.dof) {
                name = format!("{name}_dof{d}");
            }
            let n = seen.entry(name.clone()).or_default();
            *n += 1;
            if *n > 1 {
                name = format!("{name}_{n}");
            }
            name
        })
        .collect()
}

/// Column-per-vector table; shorter vectors leave trailing cells empty.
pub fn write_tsv(path: &Path, index: &str, labels: &[String], columns: &[&[f64]]) -> Result<()> {
    let mut out = String::from(index);
    for l in labels {
        out.push('\t');
        out.push_str(l);
    }
    out.push('\n');
    let rows = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    for r in 0..rows {
        out.push_str(&(r + 1).to_string());
        for c in columns {
            out.push('\t');
            if let Some(v) = c.get(r) {
                out.push_str(&format!("{v:.16e}"));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_tsv`] back into its header and columns.
pub fn read_tsv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Report(format!("{}: empty table", path.display())))?
        .split('\t')
        .skip(1)
        .map(str::to_owned)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (n, line) in lines.enumerate() {
        for (c, cell) in line.split('\t').skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v = cell
                .parse()
                .map_err(|_| Error::Report(format!("{}:{}: bad value {cell:?}", path.display(), n + 2)))?;
            columns
                .get_mut(c)
                .ok_or_else(|| Error::Report(format!("{}:{}: too many cells", path.display(), n + 2)))?
                .push(v);
        }
    }
    Ok((header, columns))
}
