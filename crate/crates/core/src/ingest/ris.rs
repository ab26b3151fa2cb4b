//! RIS reader and writer.
//!
//! A record runs from a `TY  - ` line to the next `ER  - ` line. Lines that
//! carry no tag inside a record continue the previous field's value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::corpus::{Corpus, RefId, RefType, Reference, SourceDb, MIN_YEAR};
use crate::ledger::Ledger;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RisError {
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("line {line}: record opened at line {opened} has no ER terminator")]
    Unterminated { line: usize, opened: usize },
    #[error("line {line}: tag {tag} outside of a TY..ER record")]
    OutsideRecord { line: usize, tag: String },
}

/// A record that parsed structurally but could not become a [`Reference`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRecord {
    /// Line of the record's `TY` tag.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RisIngest {
    pub corpus: Corpus,
    pub rejected: Vec<RejectedRecord>,
}

struct RawRecord {
    opened: usize,
    fields: Vec<(String, String)>,
}

/// Splits `XX  - value` into tag and trimmed value.
fn split_tag(line: &str) -> Option<(&str, &str)> {
    let bytes = line.as_bytes();
    if bytes.len() < 5 {
        return None;
    }
    let tag_ok = bytes[0].is_ascii_uppercase()
        && (bytes[1].is_ascii_uppercase() || bytes[1].is_ascii_digit());
    if !tag_ok || &bytes[2..5] != b"  -" {
        return None;
    }
    Some((&line[..2], line[5..].trim()))
}

fn first_year(value: &str) -> Option<i32> {
    let bytes = value.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 4 {
                return value[start..i].parse().ok();
            }
        } else {
            i += 1;
        }
    }
    None
}

fn decode(bytes: &[u8]) -> Result<&str, RisError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count();
        RisError::Encoding { line }
    })
}

fn split_records(text: &str) -> Result<Vec<RawRecord>, RisError> {
    let mut records = Vec::new();
    let mut open: Option<RawRecord> = None;
    let mut last_line = 0;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw_line.trim_end_matches('\r');
        match (split_tag(line), open.as_mut()) {
            (Some(("TY", value)), None) => {
                open = Some(RawRecord {
                    opened: line_no,
                    fields: vec![("TY".to_string(), value.to_string())],
                });
            }
            (Some(("TY", _)), Some(rec)) => {
                return Err(RisError::Unterminated {
                    line: line_no,
                    opened: rec.opened,
                });
            }
            (Some(("ER", _)), Some(_)) => {
                records.push(open.take().expect("record is open"));
            }
            (Some((tag, value)), Some(rec)) => {
                rec.fields.push((tag.to_string(), value.to_string()));
            }
            (Some((tag, _)), None) => {
                return Err(RisError::OutsideRecord {
                    line: line_no,
                    tag: tag.to_string(),
                });
            }
            (None, Some(rec)) => {
                let cont = line.trim();
                if cont.is_empty() {
                    continue;
                }
                if let Some((_, value)) = rec.fields.last_mut() {
                    if !value.is_empty() {
                        value.push(' ');
                    }
                    value.push_str(cont);
                }
            }
            // Blank lines and export banners between records.
            (None, None) => {}
        }
    }
    if let Some(rec) = open {
        return Err(RisError::Unterminated {
            line: last_line,
            opened: rec.opened,
        });
    }
    Ok(records)
}

fn build_reference(
    raw: RawRecord,
    id: RefId,
    source_db: &SourceDb,
    max_year: i32,
) -> Result<Reference, RejectedRecord> {
    let mut r = Reference::new(id, String::new(), source_db.clone());
    let mut title: Option<String> = None;
    let mut start_page: Option<String> = None;
    let mut end_page: Option<String> = None;
    let mut year_seen = false;
    let mut extra: BTreeMap<String, Vec<String>> = BTreeMap::new();

    fn set_once(slot: &mut Option<String>, value: String) -> Option<String> {
        if slot.is_none() {
            *slot = Some(value);
            None
        } else {
            Some(value)
        }
    }

    for (tag, value) in raw.fields {
        let leftover = match tag.as_str() {
            "TY" => {
                r.ref_type = RefType::from_ris(&value);
                None
            }
            _ if value.is_empty() => None,
            "AU" => {
                r.authors.push(value);
                None
            }
            "KW" => {
                r.keywords.push(value);
                None
            }
            "TI" | "T1" => set_once(&mut title, value),
            "PY" | "Y1" if !year_seen => match first_year(&value) {
                Some(y) if (MIN_YEAR..=max_year).contains(&y) => {
                    year_seen = true;
                    r.year = Some(y);
                    None
                }
                _ => Some(value),
            },
            "JO" | "JF" | "T2" => set_once(&mut r.venue, value),
            "VL" => set_once(&mut r.volume, value),
            "SP" => set_once(&mut start_page, value),
            "EP" => set_once(&mut end_page, value),
            "AB" | "N2" => set_once(&mut r.abstract_text, value),
            _ => Some(value),
        };
        if let Some(value) = leftover {
            extra.entry(tag).or_default().push(value);
        }
    }

    r.pages = match (start_page, end_page) {
        (Some(s), Some(e)) => Some(format!("{s}-{e}")),
        (s, e) => s.or(e),
    };
    r.extra = extra;
    match title {
        Some(t) => {
            r.title = t;
            Ok(r)
        }
        None => Err(RejectedRecord {
            line: raw.opened,
            reason: "record has no TI/T1 title".to_string(),
        }),
    }
}

/// Parses one database export. Ids are `<source>:<ordinal>` where the ordinal
/// is the record's 1-based position in the file.
pub fn parse_ris(
    bytes: &[u8],
    source_db: &SourceDb,
    retrieval_date: NaiveDate,
) -> Result<RisIngest, RisError> {
    let text = decode(bytes)?;
    let records = split_records(text)?;
    let total = records.len();
    let mut refs = Vec::with_capacity(total);
    let mut rejected = Vec::new();
    for (i, raw) in records.into_iter().enumerate() {
        let id = RefId(format!("{}:{:05}", source_db, i + 1));
        match build_reference(raw, id, source_db, retrieval_date.year()) {
            Ok(r) => refs.push(r),
            Err(rej) => rejected.push(rej),
        }
    }
    let mut ledger = Ledger::new();
    ledger
        .record(
            "ingest",
            total,
            rejected.len(),
            &format!("ris source={source_db}"),
            format!("{source_db}={}", refs.len()),
        )
        .expect("fresh ledger");
    let corpus = Corpus::from_parts(refs, ledger, retrieval_date)
        .expect("ids are minted from distinct ordinals");
    Ok(RisIngest { corpus, rejected })
}

fn single_line(value: &str) -> String {
    value.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Writes references in the RIS subset read by [`parse_ris`].
pub fn write_ris<'a>(refs: impl IntoIterator<Item = &'a Reference>) -> String {
    let mut out = String::new();
    let field = |out: &mut String, tag: &str, value: &str| {
        let value = single_line(value);
        if !value.is_empty() {
            let _ = writeln!(out, "{tag}  - {value}");
        }
    };
    for r in refs {
        let _ = writeln!(out, "TY  - {}", r.ref_type.ris_tag());
        for a in &r.authors {
            field(&mut out, "AU", a);
        }
        field(&mut out, "TI", &r.title);
        if let Some(y) = r.year {
            field(&mut out, "PY", &y.to_string());
        }
        if let Some(v) = &r.venue {
            field(&mut out, "JO", v);
        }
        if let Some(v) = &r.volume {
            field(&mut out, "VL", v);
        }
        if let Some(p) = &r.pages {
            field(&mut out, "SP", p);
        }
        if let Some(a) = &r.abstract_text {
            field(&mut out, "AB", a);
        }
        for k in &r.keywords {
            field(&mut out, "KW", k);
        }
        for (tag, values) in &r.extra {
            for v in values {
                field(&mut out, tag, v);
            }
        }
        out.push_str("ER  - \n\n");
    }
    out
}
