use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Ledger, LedgerError};

pub const MIN_YEAR: i32 = 1800;

/// Opaque, corpus-unique reference identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RefId(pub String);

impl RefId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RefId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Tag naming the export a reference came from (`scopus`, `wos`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceDb(pub String);

impl SourceDb {
    pub fn new(tag: impl Into<String>) -> Self {
        Self(tag.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RefType {
    Journal,
    Conference,
    Book,
    #[default]
    Other,
}

impl RefType {
    /// Maps an RIS `TY` value onto the four coarse kinds.
    pub fn from_ris(ty: &str) -> Self {
        match ty.trim().to_ascii_uppercase().as_str() {
            "JOUR" | "JFULL" | "EJOUR" | "MGZN" | "INPR" => RefType::Journal,
            "CONF" | "CPAPER" => RefType::Conference,
            "BOOK" | "CHAP" | "EBOOK" | "ECHAP" | "EDBOOK" => RefType::Book,
            _ => RefType::Other,
        }
    }

    pub fn ris_tag(self) -> &'static str {
        match self {
            RefType::Journal => "JOUR",
            RefType::Conference => "CONF",
            RefType::Book => "BOOK",
            RefType::Other => "GEN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub id: RefId,
    #[serde(default)]
    pub authors: Vec<String>,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pages: Option<String>,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub source_db: SourceDb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<u64>,
    #[serde(default)]
    pub ref_type: RefType,
    /// RIS tags with no dedicated field, kept in file order per tag.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Vec<String>>,
}

impl Reference {
    pub fn new(id: impl Into<RefId>, title: impl Into<String>, source_db: SourceDb) -> Self {
        Self {
            id: id.into(),
            authors: Vec::new(),
            title: title.into(),
            year: None,
            venue: None,
            volume: None,
            pages: None,
            abstract_text: None,
            keywords: Vec::new(),
            source_db,
            citation_count: None,
            ref_type: RefType::Other,
            extra: BTreeMap::new(),
        }
    }

    pub fn has_authors(&self) -> bool {
        self.authors.iter().any(|a| !a.trim().is_empty())
    }

    /// Number of populated metadata fields; the dedup "richness" score.
    pub fn populated_fields(&self) -> usize {
        fn some(s: &Option<String>) -> usize {
            usize::from(s.as_deref().is_some_and(|v| !v.trim().is_empty()))
        }
        usize::from(self.has_authors())
            + usize::from(!self.title.trim().is_empty())
            + usize::from(self.year.is_some())
            + some(&self.venue)
            + some(&self.volume)
            + some(&self.pages)
            + some(&self.abstract_text)
            + usize::from(!self.keywords.is_empty())
            + usize::from(self.citation_count.is_some())
    }
}

impl From<String> for RefId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate reference id {0}")]
    DuplicateId(RefId),
    #[error("reference {id}: year {year} outside [{MIN_YEAR}, {max}]")]
    YearOutOfRange { id: RefId, year: i32, max: i32 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Ordered reference collection with its provenance ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    references: Vec<Reference>,
    ledger: Ledger,
    retrieval_date: NaiveDate,
}

impl Corpus {
    pub fn empty(retrieval_date: NaiveDate) -> Self {
        Self {
            references: Vec::new(),
            ledger: Ledger::new(),
            retrieval_date,
        }
    }

    /// Builds a corpus after checking id uniqueness, year bounds and the
    /// ledger chain.
    pub fn from_parts(
        references: Vec<Reference>,
        ledger: Ledger,
        retrieval_date: NaiveDate,
    ) -> Result<Self, CorpusError> {
        let corpus = Self {
            references,
            ledger,
            retrieval_date,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::with_capacity(self.references.len());
        let max = self.retrieval_date.year();
        for r in &self.references {
            if !seen.insert(&r.id) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
            if let Some(year) = r.year {
                if !(MIN_YEAR..=max).contains(&year) {
                    return Err(CorpusError::YearOutOfRange {
                        id: r.id.clone(),
                        year,
                        max,
                    });
                }
            }
        }
        self.ledger.reconcile(self.references.len())?;
        Ok(())
    }

    pub fn references(&self) -> &[Reference] {
        &self.references
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn retrieval_date(&self) -> NaiveDate {
        self.retrieval_date
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn get(&self, id: &RefId) -> Option<&Reference> {
        self.references.iter().find(|r| &r.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &RefId> {
        self.references.iter().map(|r| &r.id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Reference> {
        self.references.iter()
    }

    /// Replaces the reference list with a filtered subset and ledgers the
    /// removal as one stage.
    pub(crate) fn retain_stage(
        &mut self,
        stage: &str,
        params: &str,
        note: impl Into<String>,
        kept: Vec<Reference>,
    ) -> Result<(), LedgerError> {
        let input = self.references.len();
        debug_assert!(kept.len() <= input);
        self.ensure_ledger_started();
        self.ledger
            .record(stage, input, input - kept.len(), params, note)?;
        self.references = kept;
        Ok(())
    }

    /// Records a stage that modified records without removing any.
    pub(crate) fn annotate_stage(
        &mut self,
        stage: &str,
        params: &str,
        note: impl Into<String>,
    ) -> Result<(), LedgerError> {
        self.ensure_ledger_started();
        let n = self.references.len();
        self.ledger.record(stage, n, 0, params, note)?;
        Ok(())
    }

    pub(crate) fn references_mut(&mut self) -> &mut [Reference] {
        &mut self.references
    }

    // Hand-built corpora carry no ingest entry; open the chain at the
    // current size so later stages reconcile.
    fn ensure_ledger_started(&mut self) {
        if self.ledger.is_empty() {
            let n = self.references.len();
            self.ledger
                .record("initial", n, 0, "", "")
                .expect("empty ledger accepts any start");
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<Reference>, Ledger, NaiveDate) {
        (self.references, self.ledger, self.retrieval_date)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Reference;
    type IntoIter = std::slice::Iter<'a, Reference>;

    fn into_iter(self) -> Self::IntoIter {
        self.references.iter()
    }
}
