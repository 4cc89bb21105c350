//! Tab-separated text formats for datasets, query groups and keyword weights.
//!
//! * dataset: `id<TAB>x<TAB>y<TAB>kw1,kw2,...`
//! * query group: `x<TAB>y<TAB>kw1,kw2,...[<TAB>priority]`, one member per line
//! * weights: `keyword<TAB>weight`
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{KeywordSet, ObjectId, Point, QueryGroup, QueryPoint, SpatioTextualObject};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

struct LineError {
    line: usize,
    message: String,
}

impl LineError {
    fn at(self, path: &Path) -> Error {
        Error::Parse {
            path: path.to_path_buf(),
            line: self.line,
            message: self.message,
        }
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn field<T: std::str::FromStr>(value: Option<&str>, name: &str, line: usize) -> Result<T, LineError> {
    let raw = value.ok_or_else(|| LineError {
        line,
        message: format!("missing {name} field"),
    })?;
    raw.trim().parse().map_err(|_| LineError {
        line,
        message: format!("invalid {name} '{raw}'"),
    })
}

fn coordinate(value: Option<&str>, name: &str, line: usize) -> Result<f64, LineError> {
    let v: f64 = field(value, name, line)?;
    if !v.is_finite() {
        return Err(LineError {
            line,
            message: format!("{name} is not finite"),
        });
    }
    Ok(v)
}

fn keyword_list(raw: Option<&str>) -> KeywordSet {
    raw.unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn join_keywords(keywords: &KeywordSet) -> String {
    keywords.iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

pub fn parse_dataset(text: &str) -> Result<Vec<SpatioTextualObject>, (usize, String)> {
    let mut seen: HashSet<ObjectId> = HashSet::new();
    let mut objects = Vec::new();
    for (line, l) in lines(text) {
        let mut cols = l.split('\t');
        let parsed = (|| {
            let id: ObjectId = field(cols.next(), "id", line)?;
            let x = coordinate(cols.next(), "x", line)?;
            let y = coordinate(cols.next(), "y", line)?;
            let keywords = keyword_list(cols.next());
            if cols.next().is_some() {
                return Err(LineError {
                    line,
                    message: "too many fields".into(),
                });
            }
            Ok(SpatioTextualObject {
                id,
                location: Point::new(x, y),
                keywords,
            })
        })()
        .map_err(|e| (e.line, e.message))?;
        if !seen.insert(parsed.id) {
            return Err((line, format!("duplicate object id {}", parsed.id)));
        }
        objects.push(parsed);
    }
    Ok(objects)
}

pub fn read_dataset(path: &Path) -> Result<Vec<SpatioTextualObject>> {
    let text = read_text(path)?;
    parse_dataset(&text).map_err(|(line, message)| LineError { line, message }.at(path))
}

pub fn format_dataset(objects: &[SpatioTextualObject]) -> String {
    let mut out = String::new();
    for o in objects {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            o.id,
            o.location.x,
            o.location.y,
            join_keywords(&o.keywords)
        );
    }
    out
}

pub fn write_dataset(path: &Path, objects: &[SpatioTextualObject]) -> Result<()> {
    write_text(path, &format_dataset(objects))
}

pub fn parse_query_group(text: &str) -> Result<QueryGroup, (usize, String)> {
    let mut members = Vec::new();
    for (line, l) in lines(text) {
        let mut cols = l.split('\t');
        let member = (|| {
            let x = coordinate(cols.next(), "x", line)?;
            let y = coordinate(cols.next(), "y", line)?;
            let keywords = keyword_list(cols.next());
            let priority = match cols.next() {
                Some(p) if !p.trim().is_empty() => field(Some(p), "priority", line)?,
                _ => 1.0,
            };
            QueryPoint::with_priority(Point::new(x, y), keywords, priority).map_err(|e| LineError {
                line,
                message: e.to_string(),
            })
        })()
        .map_err(|e| (e.line, e.message))?;
        members.push(member);
    }
    QueryGroup::new(members).map_err(|e| (0, e.to_string()))
}

pub fn read_query_group(path: &Path) -> Result<QueryGroup> {
    let text = read_text(path)?;
    parse_query_group(&text).map_err(|(line, message)| LineError { line, message }.at(path))
}

pub fn format_query_group(group: &QueryGroup) -> String {
    let mut out = String::new();
    for q in group.members() {
        let _ = write!(out, "{}\t{}\t{}", q.location.x, q.location.y, join_keywords(&q.keywords));
        if q.priority != 1.0 {
            let _ = write!(out, "\t{}", q.priority);
        }
        out.push('\n');
    }
    out
}

pub fn write_query_group(path: &Path, group: &QueryGroup) -> Result<()> {
    write_text(path, &format_query_group(group))
}

pub fn parse_weights(text: &str) -> Result<HashMap<String, f64>, (usize, String)> {
    let mut weights = HashMap::new();
    for (line, l) in lines(text) {
        let (kw, w) = l
            .split_once('\t')
            .ok_or_else(|| (line, "expected keyword<TAB>weight".to_string()))?;
        let kw = kw.trim();
        if kw.is_empty() {
            return Err((line, "empty keyword".into()));
        }
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| (line, format!("invalid weight '{w}'")))?;
        if !(w.is_finite() && w > 0.0) {
            return Err((line, format!("weight must be positive, got {w}")));
        }
        weights.insert(kw.to_string(), w);
    }
    Ok(weights)
}

pub fn read_weights(path: &Path) -> Result<HashMap<String, f64>> {
    let text = read_text(path)?;
    parse_weights(&text).map_err(|(line, message)| LineError { line, message }.at(path))
}
