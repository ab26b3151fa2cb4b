//! Native corpus persistence: one JSON object per line.
//!
//! ```text
//! {"format":"mapstudy-corpus","version":1,"retrieval_date":"2016-04-26","records":2}
//! {"record":{...}}
//! {"record":{...}}
//! {"ledger":{...}}
//! ```
//!
//! The header comes first, then every record in corpus order, then the
//! ledger entries in order. See `docs/corpus-format.md`.

use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Reference};
use crate::ledger::{Ledger, LedgerEntry};

pub const FORMAT_NAME: &str = "mapstudy-corpus";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("header announces {expected} records, file holds {found}")]
    Count { expected: usize, found: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    retrieval_date: NaiveDate,
    records: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Line {
    Record(Box<Reference>),
    Ledger(LedgerEntry),
}

pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<(), StoreError> {
    let header = Header {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        retrieval_date: corpus.retrieval_date(),
        records: corpus.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for r in corpus {
        serde_json::to_writer(&mut out, &Line::Record(Box::new(r.clone())))
            .map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    for e in corpus.ledger().entries() {
        serde_json::to_writer(&mut out, &Line::Ledger(e.clone())).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    write_corpus(corpus, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn read_corpus(input: impl BufRead) -> Result<Corpus, StoreError> {
    let mut header: Option<Header> = None;
    let mut refs = Vec::new();
    let mut entries = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |e: serde_json::Error| StoreError::Malformed {
            line: line_no,
            message: e.to_string(),
        };
        if header.is_none() {
            let h: Header = serde_json::from_str(&line).map_err(malformed)?;
            if h.format != FORMAT_NAME || h.version != FORMAT_VERSION {
                return Err(StoreError::Malformed {
                    line: line_no,
                    message: format!("unsupported format {} v{}", h.format, h.version),
                });
            }
            header = Some(h);
            continue;
        }
        match serde_json::from_str::<Line>(&line).map_err(malformed)? {
            Line::Record(r) => {
                if !entries.is_empty() {
                    return Err(StoreError::Malformed {
                        line: line_no,
                        message: "record after ledger block".to_string(),
                    });
                }
                refs.push(*r);
            }
            Line::Ledger(e) => entries.push(e),
        }
    }
    let header = header.ok_or(StoreError::Malformed {
        line: 1,
        message: "missing header".to_string(),
    })?;
    if header.records != refs.len() {
        return Err(StoreError::Count {
            expected: header.records,
            found: refs.len(),
        });
    }
    let ledger = Ledger::from_entries(entries).map_err(CorpusError::from)?;
    Ok(Corpus::from_parts(refs, ledger, header.retrieval_date)?)
}
