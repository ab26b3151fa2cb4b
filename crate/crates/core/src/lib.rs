//! Workbench for bibliometric systematic mapping studies.
//!
//! The crate covers the whole protocol over exported citation metadata:
//! RIS ingest with provenance ([`ingest`]), the boolean/wildcard search
//! language ([`query`]), multi-pass curation ([`curation`]), sample-size
//! statistics and human review sessions ([`sampling`]), publication trend
//! analytics with stepwise polynomial regression ([`trend`]), artifact
//! emission ([`report`]) and declarative replication pipelines
//! ([`pipeline`]).

pub mod corpus;
pub mod curation;
pub mod ingest;
pub mod ledger;
pub mod pipeline;
pub mod query;
pub mod report;
pub mod sampling;
pub mod synth;
pub mod text;
pub mod trend;

pub use corpus::{Corpus, CorpusError, RefId, RefType, Reference, SourceDb};
pub use ledger::{Ledger, LedgerEntry};
