//! Database exports into a unified corpus.

mod citations;
mod ris;
mod store;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use chrono::{NaiveDate, Utc};

pub use citations::{attach_citations, AttachReport, CitationSidecar, SidecarError};
pub use ris::{parse_ris, write_ris, RejectedRecord, RisError, RisIngest};
pub use store::{corpus_to_string, read_corpus, write_corpus, StoreError, FORMAT_NAME, FORMAT_VERSION};

use crate::corpus::{Corpus, RefId, SourceDb};
use crate::ledger::Ledger;

/// Concatenates per-database corpora. Duplicates are kept; removing them is
/// a curation stage.
///
/// When two parts share an id every reference is re-minted as
/// `<source>#<part>:<position>`, which is unique because `(part, position)`
/// is.
pub fn merge_corpora(parts: Vec<Corpus>) -> Corpus {
    match parts.len() {
        0 => return Corpus::empty(Utc::now().date_naive()),
        1 => return parts.into_iter().next().expect("one part"),
        _ => {}
    }
    let retrieval_date: NaiveDate = parts
        .iter()
        .map(Corpus::retrieval_date)
        .max()
        .expect("non-empty");

    let mut seen = HashSet::new();
    let collision = parts
        .iter()
        .flat_map(|p| p.ids())
        .any(|id| !seen.insert(id.clone()));

    let mut per_source: BTreeMap<SourceDb, usize> = BTreeMap::new();
    let mut refs = Vec::with_capacity(parts.iter().map(Corpus::len).sum());
    for (part_idx, part) in parts.into_iter().enumerate() {
        let (part_refs, _, _) = part.into_parts();
        for (pos, mut r) in part_refs.into_iter().enumerate() {
            *per_source.entry(r.source_db.clone()).or_default() += 1;
            if collision {
                r.id = RefId(format!("{}#{}:{:05}", r.source_db, part_idx + 1, pos + 1));
            }
            refs.push(r);
        }
    }

    let note = per_source
        .iter()
        .map(|(s, n)| format!("{s}={n}"))
        .collect::<Vec<_>>()
        .join(" ");
    let mut ledger = Ledger::new();
    ledger
        .record("merge", refs.len(), 0, &format!("reminted={collision}"), note)
        .expect("fresh ledger");
    Corpus::from_parts(refs, ledger, retrieval_date).expect("merged ids are unique")
}

#[derive(Debug, thiserror::Error)]
pub enum IngestFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Ris { path: String, source: RisError },
    #[error("{path}: {source}")]
    Store { path: String, source: StoreError },
    #[error("{path}: {source}")]
    Sidecar { path: String, source: SidecarError },
}

pub fn read_ris_file(
    path: &Path,
    source_db: &SourceDb,
    retrieval_date: NaiveDate,
) -> Result<RisIngest, IngestFileError> {
    let shown = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| IngestFileError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_ris(&bytes, source_db, retrieval_date)
        .map_err(|source| IngestFileError::Ris { path: shown, source })
}

pub fn load_corpus(path: &Path) -> Result<Corpus, IngestFileError> {
    let shown = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| IngestFileError::Io {
        path: shown.clone(),
        source,
    })?;
    read_corpus(BufReader::new(file)).map_err(|source| IngestFileError::Store { path: shown, source })
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), IngestFileError> {
    let shown = path.display().to_string();
    let io = |source| IngestFileError::Io {
        path: shown.clone(),
        source,
    };
    // write-then-rename so a failed stage never leaves a torn corpus file
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, corpus_to_string(corpus)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

pub fn load_sidecar(path: &Path) -> Result<CitationSidecar, IngestFileError> {
    let shown = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| IngestFileError::Io {
        path: shown.clone(),
        source,
    })?;
    CitationSidecar::from_csv(file).map_err(|source| IngestFileError::Sidecar { path: shown, source })
}
