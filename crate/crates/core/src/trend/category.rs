use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RefId};
use crate::query::{parse_query, CorpusIndex, FieldMask, QueryAst};

use super::TrendError;

/// One classification category: a named query over chosen fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySpec {
    pub name: String,
    pub query: QueryAst,
    pub mask: FieldMask,
}

impl CategorySpec {
    pub fn new(name: impl Into<String>, query: &str, mask: FieldMask) -> Result<Self, TrendError> {
        let name = name.into();
        let query = parse_query(query).map_err(|e| TrendError::Spec {
            line: 0,
            message: format!("{name}: {e}"),
        })?;
        Ok(Self { name, query, mask })
    }
}

/// Parses `label :: mask :: query` lines; `#` starts a comment line.
pub fn parse_category_specs(text: &str) -> Result<Vec<CategorySpec>, TrendError> {
    let mut specs: Vec<CategorySpec> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| TrendError::Spec {
            line: idx + 1,
            message,
        };
        let parts: Vec<&str> = line.splitn(3, "::").map(str::trim).collect();
        let [name, mask, query] = parts[..] else {
            return Err(err("expected `label :: mask :: query`".into()));
        };
        if name.is_empty() {
            return Err(err("empty label".into()));
        }
        if specs.iter().any(|s| s.name == name) {
            return Err(err(format!("duplicate label `{name}`")));
        }
        let mask: FieldMask = mask.parse().map_err(|e| err(format!("{e}")))?;
        let query = parse_query(query).map_err(|e| err(e.to_string()))?;
        specs.push(CategorySpec {
            name: name.to_string(),
            query,
            mask,
        });
    }
    Ok(specs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub name: String,
    pub count: usize,
    pub ids: Vec<RefId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub rows: Vec<CategoryRow>,
    /// Distinct references matching at least one category.
    pub explicit_total: usize,
    pub corpus_size: usize,
}

impl CategoryTable {
    pub fn count(&self, name: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.name == name).map(|r| r.count)
    }
}

/// Per-category hit counts. A reference may fall in several categories.
pub fn category_counts(corpus: &Corpus, specs: &[CategorySpec]) -> CategoryTable {
    let index = CorpusIndex::new(corpus);
    let mut any: BTreeSet<RefId> = BTreeSet::new();
    let rows = specs
        .iter()
        .map(|s| {
            let ids = index.run(&s.query, s.mask).ids;
            any.extend(ids.iter().cloned());
            CategoryRow {
                name: s.name.clone(),
                count: ids.len(),
                ids,
            }
        })
        .collect();
    CategoryTable {
        rows,
        explicit_total: any.len(),
        corpus_size: corpus.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Reference, SourceDb};
    use crate::ledger::Ledger;
    use chrono::NaiveDate;

    fn corpus(titles: &[&str]) -> Corpus {
        let refs = titles
            .iter()
            .enumerate()
            .map(|(i, t)| Reference::new(format!("r{i}"), *t, SourceDb::new("s")))
            .collect();
        Corpus::from_parts(refs, Ledger::new(), NaiveDate::from_ymd_opt(2016, 4, 26).unwrap())
            .unwrap()
    }

    #[test]
    fn hand_enumerated_counts() {
        let c = corpus(&[
            "spectral clustering of graphs",
            "louvain modularity",
            "spectral louvain hybrid",
            "unrelated",
            "spectral bounds",
        ]);
        let specs = parse_category_specs(
            "# two categories\nspectral :: title :: spectral\nlouvain :: all :: louvain\n",
        )
        .unwrap();
        let t = category_counts(&c, &specs);
        assert_eq!(t.count("spectral"), Some(3));
        assert_eq!(t.count("louvain"), Some(2));
        assert_eq!(t.explicit_total, 4);
        assert_eq!(t.rows[1].ids, vec![RefId::new("r1"), RefId::new("r2")]);
    }

    #[test]
    fn empty_specs() {
        let t = category_counts(&corpus(&["a"]), &[]);
        assert!(t.rows.is_empty());
        assert_eq!(t.explicit_total, 0);
    }

    #[test]
    fn spec_file_errors_name_the_line() {
        let err = parse_category_specs("ok :: all :: a\nbad :: nowhere :: b").unwrap_err();
        assert!(matches!(err, TrendError::Spec { line: 2, .. }), "{err}");
        let err = parse_category_specs("x :: all :: (a").unwrap_err();
        assert!(matches!(err, TrendError::Spec { line: 1, .. }));
        assert!(parse_category_specs("x :: all :: a\nx :: all :: b").is_err());
    }
}
