//! Append-only provenance ledger.
//!
//! Every stage that adds or removes references appends one entry. Entries
//! chain: the output count of entry `k` is the input count of entry `k + 1`,
//! and each entry satisfies `input - removed = output`.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub stage: String,
    pub input: usize,
    pub removed: usize,
    pub output: usize,
    /// Short sha256 digest of the canonical parameter string of the stage.
    pub params_digest: String,
    /// Free-form human readable detail (per-source counts, rule label, ...).
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("ledger entry {index} ({stage}): {input} - {removed} != {output}")]
    Unbalanced {
        index: usize,
        stage: String,
        input: usize,
        removed: usize,
        output: usize,
    },
    #[error("ledger entry {index} ({stage}) starts at {input} but previous stage ended at {previous}")]
    Broken {
        index: usize,
        stage: String,
        input: usize,
        previous: usize,
    },
    #[error("ledger ends at {ledger} references but the corpus holds {corpus}")]
    SizeMismatch { ledger: usize, corpus: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

pub fn params_digest(params: &str) -> String {
    let digest = Sha256::digest(params.as_bytes());
    hex::encode(&digest[..8])
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Size the ledger started from, if any entry exists.
    pub fn initial_size(&self) -> Option<usize> {
        self.entries.first().map(|e| e.input)
    }

    pub fn current_size(&self) -> Option<usize> {
        self.entries.last().map(|e| e.output)
    }

    pub fn total_removed(&self) -> usize {
        self.entries.iter().map(|e| e.removed).sum()
    }

    /// Appends a stage. `input` must equal the output of the previous entry.
    pub fn record(
        &mut self,
        stage: impl Into<String>,
        input: usize,
        removed: usize,
        params: &str,
        note: impl Into<String>,
    ) -> Result<&LedgerEntry, LedgerError> {
        let stage = stage.into();
        if removed > input {
            return Err(LedgerError::Unbalanced {
                index: self.entries.len(),
                stage,
                input,
                removed,
                output: 0,
            });
        }
        if let Some(previous) = self.current_size() {
            if previous != input {
                return Err(LedgerError::Broken {
                    index: self.entries.len(),
                    stage,
                    input,
                    previous,
                });
            }
        }
        self.entries.push(LedgerEntry {
            stage,
            input,
            removed,
            output: input - removed,
            params_digest: params_digest(params),
            note: note.into(),
            timestamp: Utc::now(),
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Re-adopts entries loaded from disk after checking the chain.
    pub fn from_entries(entries: Vec<LedgerEntry>) -> Result<Self, LedgerError> {
        let ledger = Self { entries };
        ledger.verify()?;
        Ok(ledger)
    }

    pub fn verify(&self) -> Result<(), LedgerError> {
        let mut previous: Option<usize> = None;
        for (index, e) in self.entries.iter().enumerate() {
            if e.removed > e.input || e.input - e.removed != e.output {
                return Err(LedgerError::Unbalanced {
                    index,
                    stage: e.stage.clone(),
                    input: e.input,
                    removed: e.removed,
                    output: e.output,
                });
            }
            if let Some(prev) = previous {
                if prev != e.input {
                    return Err(LedgerError::Broken {
                        index,
                        stage: e.stage.clone(),
                        input: e.input,
                        previous: prev,
                    });
                }
            }
            previous = Some(e.output);
        }
        Ok(())
    }

    /// Checks the chain and that it ends at `corpus_size`.
    pub fn reconcile(&self, corpus_size: usize) -> Result<(), LedgerError> {
        self.verify()?;
        match self.current_size() {
            Some(ledger) if ledger != corpus_size => Err(LedgerError::SizeMismatch {
                ledger,
                corpus: corpus_size,
            }),
            _ => Ok(()),
        }
    }

    pub(crate) fn timestamp_string(entry: &LedgerEntry) -> String {
        entry.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true)
    }
}
