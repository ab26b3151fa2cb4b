//! Citation-count sidecar (`key,citations` CSV keyed by normalized title).

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::text::normalize_key;

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("sidecar csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("sidecar header must be `key,citations`, found `{0}`")]
    Header(String),
    #[error("conflicting citation counts for keys: {}", .0.join("; "))]
    Conflicts(Vec<String>),
}

/// Normalized title → citation count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitationSidecar {
    counts: BTreeMap<String, u64>,
}

#[derive(Debug, Deserialize)]
struct Row {
    key: String,
    citations: u64,
}

impl CitationSidecar {
    /// Builds a sidecar from raw pairs; keys are normalized. Repeated keys
    /// must agree on the count.
    pub fn from_pairs<K: AsRef<str>>(
        pairs: impl IntoIterator<Item = (K, u64)>,
    ) -> Result<Self, SidecarError> {
        let mut counts = BTreeMap::new();
        let mut conflicts = Vec::new();
        for (key, count) in pairs {
            let key = normalize_key(key.as_ref());
            match counts.get(&key) {
                Some(&existing) if existing != count => {
                    if !conflicts.contains(&key) {
                        conflicts.push(key);
                    }
                }
                Some(_) => {}
                None => {
                    counts.insert(key, count);
                }
            }
        }
        if conflicts.is_empty() {
            Ok(Self { counts })
        } else {
            Err(SidecarError::Conflicts(conflicts))
        }
    }

    pub fn from_csv(reader: impl Read) -> Result<Self, SidecarError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "key" || &headers[1] != "citations" {
            return Err(SidecarError::Header(headers.iter().collect::<Vec<_>>().join(",")));
        }
        let mut pairs = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            pairs.push((row.key, row.citations));
        }
        Self::from_pairs(pairs)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttachReport {
    /// References that received a count.
    pub attached: usize,
    /// Sidecar keys that matched no reference.
    pub orphans: Vec<String>,
}

/// Sets `citation_count` on every reference whose normalized title has a
/// sidecar row. References without a row are left untouched.
pub fn attach_citations(corpus: &mut Corpus, sidecar: &CitationSidecar) -> AttachReport {
    let mut used = vec![false; sidecar.counts.len()];
    let index: BTreeMap<&str, usize> = sidecar
        .counts
        .keys()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut attached = 0;
    for r in corpus.references_mut() {
        let key = normalize_key(&r.title);
        if let Some(&i) = index.get(key.as_str()) {
            used[i] = true;
            r.citation_count = Some(sidecar.counts[&key]);
            attached += 1;
        }
    }
    let orphans: Vec<String> = sidecar
        .counts
        .keys()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(k, _)| k.clone())
        .collect();
    if !sidecar.is_empty() {
        corpus
            .annotate_stage(
                "attach-citations",
                &format!("rows={}", sidecar.len()),
                format!("attached={attached} orphans={}", orphans.len()),
            )
            .expect("annotation keeps the chain");
    }
    AttachReport { attached, orphans }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Reference, SourceDb};
    use crate::ledger::Ledger;
    use chrono::NaiveDate;

    const GN: &str = "Community structure in social and biological networks";
    const RAVASZ: &str = "Hierarchical organization of modularity in metabolic networks";

    fn corpus() -> Corpus {
        let refs = vec![
            Reference::new("a", GN, SourceDb::new("wos")),
            Reference::new("b", RAVASZ, SourceDb::new("wos")),
            Reference::new("c", "Something else", SourceDb::new("wos")),
        ];
        Corpus::from_parts(refs, Ledger::new(), NaiveDate::from_ymd_opt(2016, 4, 26).unwrap())
            .unwrap()
    }

    #[test]
    fn attaches_matching_counts() {
        let mut c = corpus();
        let sidecar = CitationSidecar::from_pairs([(GN, 3203), (RAVASZ, 1734)]).unwrap();
        let report = attach_citations(&mut c, &sidecar);
        assert_eq!(report, AttachReport { attached: 2, orphans: vec![] });
        let counts: Vec<_> = c.iter().map(|r| r.citation_count).collect();
        assert_eq!(counts, vec![Some(3203), Some(1734), None]);
        c.validate().unwrap();
    }

    #[test]
    fn empty_sidecar_is_identity() {
        let mut c = corpus();
        let before = c.clone();
        let report = attach_citations(&mut c, &CitationSidecar::default());
        assert_eq!(report.orphans.len(), 0);
        assert_eq!(c, before);
    }

    #[test]
    fn unmatched_row_is_an_orphan() {
        let mut c = corpus();
        let refs_before = c.references().to_vec();
        let sidecar = CitationSidecar::from_pairs([("No such paper", 5)]).unwrap();
        let report = attach_citations(&mut c, &sidecar);
        assert_eq!(report.orphans, vec!["no such paper".to_string()]);
        assert_eq!(c.references(), &refs_before[..]);
    }

    #[test]
    fn conflicting_duplicate_keys_are_listed() {
        let err = CitationSidecar::from_pairs([("A paper", 1), ("a  paper!", 2), ("B", 3), ("b", 3)])
            .unwrap_err();
        match err {
            SidecarError::Conflicts(keys) => assert_eq!(keys, vec!["a paper".to_string()]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_header_is_checked() {
        let ok = CitationSidecar::from_csv("key,citations\n\"Graphs, and more\",12\n".as_bytes())
            .unwrap();
        assert_eq!(ok.len(), 1);
        assert!(matches!(
            CitationSidecar::from_csv("title,count\nx,1\n".as_bytes()),
            Err(SidecarError::Header(_))
        ));
    }
}
