//! Corpus filtering: duplicate collapse, authorless removal and
//! query-driven exclusion of false positives. Each stage is ledgered.

mod dedup;
mod exclusion;

pub use dedup::{dedup, DedupPolicy, DedupReport, DuplicateLink, KeyField, PolicyError};
pub use exclusion::{
    apply_exclusions, parse_rules, pending_flags, read_verdicts, ExclusionError, ExclusionMode,
    ExclusionOutcome, ExclusionRule, PendingFlag, RuleTally, ScreeningVerdict, Verdicts,
};
pub use crate::text::normalize_key;

use crate::corpus::{Corpus, Reference};

/// Drops references without any author and returns them for inspection.
pub fn remove_authorless(corpus: &mut Corpus) -> Vec<Reference> {
    let (kept, removed): (Vec<Reference>, Vec<Reference>) =
        corpus.references().iter().cloned().partition(Reference::has_authors);
    corpus
        .retain_stage("authorless", "", format!("removed={}", removed.len()), kept)
        .expect("filtering keeps the ledger chain");
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceDb;
    use crate::ledger::Ledger;
    use chrono::NaiveDate;

    fn corpus(authorless: &[bool]) -> Corpus {
        let refs = authorless
            .iter()
            .enumerate()
            .map(|(i, none)| {
                let mut r = Reference::new(format!("r{i}"), format!("t{i}"), SourceDb::new("s"));
                if !none {
                    r.authors.push("Palla, G.".into());
                }
                r
            })
            .collect();
        Corpus::from_parts(refs, Ledger::new(), NaiveDate::from_ymd_opt(2016, 4, 26).unwrap())
            .unwrap()
    }

    #[test]
    fn splits_authorless() {
        let mut c = corpus(&[false, true, false, true, false]);
        let removed = remove_authorless(&mut c);
        assert_eq!((c.len(), removed.len()), (3, 2));
        let last = c.ledger().entries().last().unwrap();
        assert_eq!((last.input, last.removed, last.output), (5, 2, 3));
    }

    #[test]
    fn identity_when_all_have_authors() {
        let mut c = corpus(&[false, false]);
        let refs = c.references().to_vec();
        assert!(remove_authorless(&mut c).is_empty());
        assert_eq!(c.references(), &refs[..]);
        // twice is the same as once
        assert!(remove_authorless(&mut c).is_empty());
    }

    #[test]
    fn whitespace_author_counts_as_missing() {
        let mut c = corpus(&[true]);
        let mut refs = c.references().to_vec();
        refs[0].authors.push("   ".into());
        c = Corpus::from_parts(refs, Ledger::new(), c.retrieval_date()).unwrap();
        assert_eq!(remove_authorless(&mut c).len(), 1);
    }
}
