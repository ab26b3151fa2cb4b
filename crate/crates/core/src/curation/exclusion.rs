//! Query-driven removal of false positives.
//!
//! Rules are applied in order, each over the references left by the
//! previous ones. A flag-for-review rule removes only the matches a human
//! marked `remove`; an auto-remove rule removes every match.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, RefId, Reference};
use crate::query::{parse_query, CorpusIndex, FieldMask, QueryAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionMode {
    #[default]
    FlagForReview,
    AutoRemove,
}

impl FromStr for ExclusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flag" | "flag-for-review" | "review" => Ok(Self::FlagForReview),
            "auto" | "auto-remove" | "remove" => Ok(Self::AutoRemove),
            other => Err(format!("unknown exclusion mode `{other}`")),
        }
    }
}

impl fmt::Display for ExclusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FlagForReview => "flag-for-review",
            Self::AutoRemove => "auto-remove",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionRule {
    label: String,
    query: QueryAst,
    mode: ExclusionMode,
}

impl ExclusionRule {
    pub fn new(label: impl Into<String>, query: QueryAst, mode: ExclusionMode) -> Result<Self, ExclusionError> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(ExclusionError::Rule {
                line: 0,
                message: "rule label is empty".into(),
            });
        }
        query.validate().map_err(|e| ExclusionError::Rule {
            line: 0,
            message: e.0,
        })?;
        Ok(Self { label, query, mode })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn query(&self) -> &QueryAst {
        &self.query
    }

    pub fn mode(&self) -> ExclusionMode {
        self.mode
    }
}

/// Human decision on a flagged reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreeningVerdict {
    Keep,
    Remove,
}

impl FromStr for ScreeningVerdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "keep" => Ok(Self::Keep),
            "remove" => Ok(Self::Remove),
            other => Err(format!("unknown verdict `{other}` (expected keep or remove)")),
        }
    }
}

pub type Verdicts = BTreeMap<RefId, ScreeningVerdict>;

#[derive(Debug, Error)]
pub enum ExclusionError {
    #[error("{} flagged reference(s) lack a verdict: {}", .0.len(), join_ids(.0))]
    Unresolved(Vec<RefId>),
    #[error("rules line {line}: {message}")]
    Rule { line: usize, message: String },
    #[error("verdicts: {0}")]
    Verdicts(String),
}

fn join_ids(ids: &[RefId]) -> String {
    ids.iter().map(RefId::as_str).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTally {
    pub label: String,
    pub mode: ExclusionMode,
    pub matched: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionOutcome {
    pub per_rule: Vec<RuleTally>,
    /// Removed references with the label of the rule that removed them.
    pub removed: Vec<(Reference, String)>,
    /// Flagged references a reviewer chose to keep.
    pub kept_flagged: Vec<(RefId, String)>,
}

/// A reference flagged by a review rule, waiting for a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingFlag {
    pub id: RefId,
    pub rule: String,
}

struct Plan {
    per_rule: Vec<(RuleTally, Vec<usize>)>,
    kept_flagged: Vec<(RefId, String)>,
    pending: Vec<PendingFlag>,
}

fn plan(corpus: &Corpus, rules: &[ExclusionRule], verdicts: &Verdicts) -> Plan {
    let index = CorpusIndex::new(corpus);
    let position: BTreeMap<&RefId, usize> =
        corpus.ids().enumerate().map(|(i, id)| (id, i)).collect();
    let mut gone: HashSet<usize> = HashSet::new();
    let mut pending_seen: BTreeSet<RefId> = BTreeSet::new();
    let mut out = Plan {
        per_rule: Vec::new(),
        kept_flagged: Vec::new(),
        pending: Vec::new(),
    };
    for rule in rules {
        let hits: Vec<usize> = index
            .run(&rule.query, FieldMask::ALL)
            .ids
            .iter()
            .map(|id| position[id])
            .filter(|i| !gone.contains(i))
            .collect();
        let mut removed = Vec::new();
        for &i in &hits {
            let id = &corpus.references()[i].id;
            let remove = match rule.mode {
                ExclusionMode::AutoRemove => true,
                ExclusionMode::FlagForReview => match verdicts.get(id) {
                    Some(ScreeningVerdict::Remove) => true,
                    Some(ScreeningVerdict::Keep) => {
                        out.kept_flagged.push((id.clone(), rule.label.clone()));
                        false
                    }
                    None => {
                        if pending_seen.insert(id.clone()) {
                            out.pending.push(PendingFlag {
                                id: id.clone(),
                                rule: rule.label.clone(),
                            });
                        }
                        false
                    }
                },
            };
            if remove {
                removed.push(i);
            }
        }
        gone.extend(removed.iter().copied());
        out.per_rule.push((
            RuleTally {
                label: rule.label.clone(),
                mode: rule.mode,
                matched: hits.len(),
                removed: removed.len(),
            },
            removed,
        ));
    }
    out
}

/// Flagged references that still need a verdict before
/// [`apply_exclusions`] can run.
pub fn pending_flags(corpus: &Corpus, rules: &[ExclusionRule], verdicts: &Verdicts) -> Vec<PendingFlag> {
    plan(corpus, rules, verdicts).pending
}

/// Applies every rule or none: if any flagged reference lacks a verdict the
/// corpus is left untouched.
pub fn apply_exclusions(
    corpus: &mut Corpus,
    rules: &[ExclusionRule],
    verdicts: &Verdicts,
) -> Result<ExclusionOutcome, ExclusionError> {
    let plan = plan(corpus, rules, verdicts);
    if !plan.pending.is_empty() {
        return Err(ExclusionError::Unresolved(
            plan.pending.into_iter().map(|p| p.id).collect(),
        ));
    }
    // plan indices point into the corpus as it was before the first rule
    let removal_sets: Vec<HashSet<RefId>> = plan
        .per_rule
        .iter()
        .map(|(_, idx)| idx.iter().map(|&i| corpus.references()[i].id.clone()).collect())
        .collect();
    let mut removed = Vec::new();
    let mut per_rule = Vec::with_capacity(rules.len());
    for (((tally, _), ids), rule) in plan.per_rule.into_iter().zip(removal_sets).zip(rules) {
        let (gone, kept): (Vec<Reference>, Vec<Reference>) =
            corpus.references().iter().cloned().partition(|r| ids.contains(&r.id));
        let params = format!("mode={} query={}", rule.mode, rule.query);
        let note = format!("matched={} removed={}", tally.matched, tally.removed);
        corpus
            .retain_stage(&format!("exclude:{}", rule.label), &params, note, kept)
            .expect("filtering keeps the ledger chain");
        removed.extend(gone.into_iter().map(|r| (r, rule.label.clone())));
        per_rule.push(tally);
    }
    Ok(ExclusionOutcome {
        per_rule,
        removed,
        kept_flagged: plan.kept_flagged,
    })
}

/// Parses a rules file: one `label :: mode :: query` per line, `#` comments.
pub fn parse_rules(text: &str) -> Result<Vec<ExclusionRule>, ExclusionError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rule_err = |message: String| ExclusionError::Rule { line: line_no, message };
        let parts: Vec<&str> = line.splitn(3, "::").map(str::trim).collect();
        let [label, mode, query] = parts[..] else {
            return Err(rule_err("expected `label :: mode :: query`".into()));
        };
        let mode = mode.parse().map_err(rule_err)?;
        let query = parse_query(query).map_err(|e| rule_err(e.to_string()))?;
        rules.push(
            ExclusionRule::new(label, query, mode).map_err(|e| rule_err(e.to_string()))?,
        );
    }
    Ok(rules)
}

/// Reads an `id,verdict` CSV (`keep` / `remove`).
pub fn read_verdicts(reader: impl Read) -> Result<Verdicts, ExclusionError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Verdicts::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| ExclusionError::Verdicts(e.to_string()))?;
        let (Some(id), Some(verdict)) = (row.get(0), row.get(1)) else {
            return Err(ExclusionError::Verdicts(format!("row {}: expected id,verdict", i + 2)));
        };
        if verdict.is_empty() {
            continue;
        }
        let verdict = verdict
            .parse()
            .map_err(|e| ExclusionError::Verdicts(format!("row {}: {e}", i + 2)))?;
        out.insert(RefId::new(id), verdict);
    }
    Ok(out)
}
