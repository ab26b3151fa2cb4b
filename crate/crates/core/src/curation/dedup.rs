use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, RefId, Reference, SourceDb};
use crate::text::normalize_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyField {
    Title,
    Year,
    Volume,
    Venue,
}

impl KeyField {
    fn key(self, r: &Reference) -> String {
        match self {
            KeyField::Title => normalize_key(&r.title),
            KeyField::Year => r.year.map(|y| y.to_string()).unwrap_or_default(),
            KeyField::Volume => r.volume.as_deref().map(normalize_key).unwrap_or_default(),
            KeyField::Venue => r.venue.as_deref().map(normalize_key).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("pass-2 key fields must be a subset of the pass-1 fields")]
    NotCoarser,
    #[error("both passes must compare titles")]
    NoTitle,
}

/// Two-pass duplicate detection settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupPolicy {
    pass1: Vec<KeyField>,
    pass2: Vec<KeyField>,
    /// Pass-2 only merges records whose years differ by at most this much.
    /// `None` merges on the pass-2 key alone.
    year_guard: Option<u32>,
    /// Tie-break order for equally rich duplicates; unlisted sources rank
    /// after listed ones.
    source_priority: Vec<SourceDb>,
}

impl Default for DedupPolicy {
    fn default() -> Self {
        Self {
            pass1: vec![KeyField::Title, KeyField::Year, KeyField::Volume, KeyField::Venue],
            pass2: vec![KeyField::Title],
            year_guard: Some(1),
            source_priority: Vec::new(),
        }
    }
}

impl DedupPolicy {
    pub fn new(mut pass1: Vec<KeyField>, mut pass2: Vec<KeyField>) -> Result<Self, PolicyError> {
        pass1.sort();
        pass1.dedup();
        pass2.sort();
        pass2.dedup();
        if !pass1.contains(&KeyField::Title) || !pass2.contains(&KeyField::Title) {
            return Err(PolicyError::NoTitle);
        }
        if !pass2.iter().all(|f| pass1.contains(f)) {
            return Err(PolicyError::NotCoarser);
        }
        Ok(Self {
            pass1,
            pass2,
            ..Self::default()
        })
    }

    pub fn with_year_guard(mut self, guard: Option<u32>) -> Self {
        self.year_guard = guard;
        self
    }

    pub fn with_source_priority(mut self, priority: Vec<SourceDb>) -> Self {
        self.source_priority = priority;
        self
    }

    pub fn pass1(&self) -> &[KeyField] {
        &self.pass1
    }

    pub fn pass2(&self) -> &[KeyField] {
        &self.pass2
    }

    pub fn year_guard(&self) -> Option<u32> {
        self.year_guard
    }

    pub fn pass1_key(&self, r: &Reference) -> String {
        composite_key(&self.pass1, r)
    }

    pub fn pass2_key(&self, r: &Reference) -> String {
        composite_key(&self.pass2, r)
    }

    fn priority(&self, source: &SourceDb) -> usize {
        self.source_priority
            .iter()
            .position(|s| s == source)
            .unwrap_or(self.source_priority.len())
    }

    fn describe(&self) -> String {
        format!(
            "pass1={:?} pass2={:?} year_guard={:?} priority={:?}",
            self.pass1,
            self.pass2,
            self.year_guard,
            self.source_priority.iter().map(SourceDb::as_str).collect::<Vec<_>>()
        )
    }
}

fn composite_key(fields: &[KeyField], r: &Reference) -> String {
    fields
        .iter()
        .map(|f| f.key(r))
        .collect::<Vec<_>>()
        .join("\u{1f}")
}

/// A collapsed duplicate and the record that absorbed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateLink {
    pub removed: RefId,
    pub kept: RefId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupReport {
    pub pass1: Vec<DuplicateLink>,
    pub pass2: Vec<DuplicateLink>,
}

/// Indices of the records to keep, plus links for the ones dropped.
fn collapse(
    refs: &[Reference],
    policy: &DedupPolicy,
    key: impl Fn(&Reference) -> String,
    year_guard: Option<u32>,
) -> (Vec<bool>, Vec<DuplicateLink>) {
    let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, r) in refs.iter().enumerate() {
        // punctuation-only titles carry no identity
        if normalize_key(&r.title).is_empty() {
            continue;
        }
        let k = key(r);
        let slot = groups.entry(k.clone()).or_default();
        if slot.is_empty() {
            order.push(k);
        }
        slot.push(i);
    }

    let mut keep = vec![true; refs.len()];
    let mut links = Vec::new();
    for k in order {
        let members = &groups[&k];
        if members.len() < 2 {
            continue;
        }
        for cluster in year_clusters(refs, members, year_guard) {
            let winner = *cluster
                .iter()
                .min_by_key(|&&i| {
                    let r = &refs[i];
                    (
                        std::cmp::Reverse(r.populated_fields()),
                        policy.priority(&r.source_db),
                        i,
                    )
                })
                .expect("cluster is non-empty");
            for &i in &cluster {
                if i != winner {
                    keep[i] = false;
                    links.push(DuplicateLink {
                        removed: refs[i].id.clone(),
                        kept: refs[winner].id.clone(),
                    });
                }
            }
        }
    }
    (keep, links)
}

/// Single-linkage clusters over years with gaps no larger than `guard`.
/// Records without a year stay on their own.
fn year_clusters(refs: &[Reference], members: &[usize], guard: Option<u32>) -> Vec<Vec<usize>> {
    let Some(guard) = guard else {
        return vec![members.to_vec()];
    };
    let mut dated: Vec<(i32, usize)> = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in members {
        match refs[i].year {
            Some(y) => dated.push((y, i)),
            None => clusters.push(vec![i]),
        }
    }
    dated.sort();
    let mut current: Vec<usize> = Vec::new();
    let mut last_year: Option<i32> = None;
    for (y, i) in dated {
        if let Some(prev) = last_year {
            if (y - prev).unsigned_abs() > guard {
                clusters.push(std::mem::take(&mut current));
            }
        }
        current.push(i);
        last_year = Some(y);
    }
    if !current.is_empty() {
        clusters.push(current);
    }
    clusters
}

fn apply_pass(
    corpus: &mut Corpus,
    stage: &str,
    policy: &DedupPolicy,
    key: impl Fn(&Reference) -> String,
    year_guard: Option<u32>,
) -> Vec<DuplicateLink> {
    let (keep, links) = collapse(corpus.references(), policy, key, year_guard);
    let kept: Vec<Reference> = corpus
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(r, _)| r.clone())
        .collect();
    corpus
        .retain_stage(stage, &policy.describe(), format!("collapsed={}", links.len()), kept)
        .expect("filtering keeps the ledger chain");
    links
}

/// Removes duplicates in two passes: first on the full pass-1 key, then on
/// the coarser pass-2 key. The richest record of each group survives.
pub fn dedup(corpus: &mut Corpus, policy: &DedupPolicy) -> DedupReport {
    let pass1 = apply_pass(corpus, "dedup-pass1", policy, |r| policy.pass1_key(r), None);
    let guard = if policy.pass2.contains(&KeyField::Year) {
        None
    } else {
        policy.year_guard
    };
    let pass2 = apply_pass(corpus, "dedup-pass2", policy, |r| policy.pass2_key(r), guard);
    DedupReport { pass1, pass2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::Ledger;
    use chrono::NaiveDate;

    fn rec(id: &str, src: &str, title: &str, year: i32, venue: &str, volume: &str) -> Reference {
        let mut r = Reference::new(id, title, SourceDb::new(src));
        r.year = Some(year);
        r.venue = Some(venue.into());
        r.volume = Some(volume.into());
        r.authors = vec!["Newman, M.".into()];
        r
    }

    fn corpus(refs: Vec<Reference>) -> Corpus {
        Corpus::from_parts(refs, Ledger::new(), NaiveDate::from_ymd_opt(2016, 4, 26).unwrap())
            .unwrap()
    }

    #[test]
    fn exact_duplicates_across_databases_collapse() {
        let t = "Finding and evaluating community structure in networks";
        let mut c = corpus(vec![
            rec("scopus:1", "scopus", t, 2004, "Phys. Rev. E", "69"),
            rec("wos:1", "wos", t, 2004, "Phys. Rev. E", "69"),
            rec("ieee:1", "ieee", t, 2004, "Phys. Rev. E", "69"),
        ]);
        let report = dedup(&mut c, &DedupPolicy::default());
        assert_eq!(c.len(), 1);
        assert_eq!(report.pass1.len(), 2);
        assert!(report.pass2.is_empty());
        c.validate().unwrap();
    }

    #[test]
    fn venue_discrepancy_survives_pass1_collapses_in_pass2() {
        let t = "Fast algorithm for detecting community structure in networks";
        let mut c = corpus(vec![
            rec("a", "scopus", t, 2004, "Phys. Rev. E", "69"),
            rec("b", "wos", t, 2004, "Physical Review E", "69 6"),
        ]);
        let report = dedup(&mut c, &DedupPolicy::default());
        assert!(report.pass1.is_empty());
        assert_eq!(report.pass2.len(), 1);
        assert_eq!(c.len(), 1);
        let stages: Vec<_> = c.ledger().entries().iter().map(|e| (e.stage.as_str(), e.removed)).collect();
        assert_eq!(stages, vec![("initial", 0), ("dedup-pass1", 0), ("dedup-pass2", 1)]);
    }

    #[test]
    fn richest_record_wins_then_priority_then_order() {
        let t = "Modularity and community structure in networks";
        let mut poor = rec("a", "scopus", t, 2006, "PNAS", "103");
        poor.authors.clear();
        let mut rich = rec("b", "wos", t, 2006, "PNAS", "103");
        rich.abstract_text = Some("abstract".into());
        let mut c = corpus(vec![poor, rich]);
        dedup(&mut c, &DedupPolicy::default());
        assert_eq!(c.references()[0].id.as_str(), "b");

        let mut c = corpus(vec![
            rec("a", "scopus", t, 2006, "PNAS", "103"),
            rec("b", "wos", t, 2006, "PNAS", "103"),
        ]);
        let policy = DedupPolicy::default()
            .with_source_priority(vec![SourceDb::new("wos"), SourceDb::new("scopus")]);
        dedup(&mut c, &policy);
        assert_eq!(c.references()[0].id.as_str(), "b");

        let mut c = corpus(vec![
            rec("a", "scopus", t, 2006, "PNAS", "103"),
            rec("b", "wos", t, 2006, "PNAS", "103"),
        ]);
        dedup(&mut c, &DedupPolicy::default());
        assert_eq!(c.references()[0].id.as_str(), "a");
    }

    #[test]
    fn year_guard_keeps_distant_homonyms() {
        let t = "Community detection";
        let mk = || {
            corpus(vec![
                rec("a", "s", t, 2004, "J1", "1"),
                rec("b", "s", t, 2005, "J2", "2"),
                rec("c", "s", t, 2012, "J3", "3"),
            ])
        };
        let mut c = mk();
        dedup(&mut c, &DedupPolicy::default());
        assert_eq!(c.len(), 2);
        let mut c = mk();
        dedup(&mut c, &DedupPolicy::default().with_year_guard(None));
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn policy_validation() {
        use KeyField::*;
        assert!(DedupPolicy::new(vec![Title, Year], vec![Title]).is_ok());
        assert_eq!(
            DedupPolicy::new(vec![Title], vec![Title, Venue]).unwrap_err(),
            PolicyError::NotCoarser
        );
        assert_eq!(DedupPolicy::new(vec![Year], vec![Year]).unwrap_err(), PolicyError::NoTitle);
    }
}
