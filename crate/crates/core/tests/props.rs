mod support;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;

use mapstudy_core::curation::{dedup, DedupPolicy};
use mapstudy_core::ingest::{corpus_to_string, parse_ris, read_corpus, write_ris};
use mapstudy_core::query::{parse_query, run_query, QueryAst};
use mapstudy_core::sampling::{
    margin_of_error, sample_size, Advance, ReviewSession, SessionKind, SessionState, Verdict,
};
use mapstudy_core::synth::planted_duplicates;
use mapstudy_core::{Corpus, Ledger, RefId, RefType, Reference, SourceDb};

fn date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 4, 26).unwrap()
}

fn words(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z0-9][A-Za-z0-9.,:()-]{0,8}", 1..=max).prop_map(|w| w.join(" "))
}

fn reference() -> impl Strategy<Value = Reference> {
    (
        prop::collection::vec(words(3), 0..4),
        words(8),
        prop::option::of(1950i32..=2016),
        prop::option::of(words(4)),
        prop::option::of("[0-9]{1,3}"),
        prop::option::of("[0-9]{1,3}-[0-9]{1,3}"),
        prop::option::of(words(30)),
        prop::collection::vec(words(3), 0..4),
        prop_oneof![Just(RefType::Journal), Just(RefType::Conference), Just(RefType::Book), Just(RefType::Other)],
    )
        .prop_map(|(authors, title, year, venue, volume, pages, abs, keywords, ty)| {
            let mut r = Reference::new("x", title, SourceDb::new("db"));
            r.authors = authors;
            r.year = year;
            r.venue = venue;
            r.volume = volume;
            r.pages = pages;
            r.abstract_text = abs;
            r.keywords = keywords;
            r.ref_type = ty;
            r
        })
}

fn with_ids(mut refs: Vec<Reference>) -> Vec<Reference> {
    for (i, r) in refs.iter_mut().enumerate() {
        r.id = RefId::new(format!("db:{:05}", i + 1));
    }
    refs
}

fn small_corpus(n: usize) -> Corpus {
    let refs = (0..n)
        .map(|i| Reference::new(format!("s{i}"), format!("t{i}"), SourceDb::new("gen")))
        .collect();
    Corpus::from_parts(refs, Ledger::new(), date()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ris_round_trips(refs in prop::collection::vec(reference(), 0..20)) {
        let refs = with_ids(refs);
        let text = write_ris(&refs);
        let back = parse_ris(text.as_bytes(), &SourceDb::new("db"), date()).unwrap();
        prop_assert!(back.rejected.is_empty());
        prop_assert_eq!(back.corpus.references(), refs.as_slice());
    }

    #[test]
    fn corpus_file_round_trips(refs in prop::collection::vec(reference(), 0..20)) {
        let text = write_ris(&with_ids(refs));
        let corpus = parse_ris(text.as_bytes(), &SourceDb::new("db"), date()).unwrap().corpus;
        let stored = corpus_to_string(&corpus);
        let back = read_corpus(stored.as_bytes()).unwrap();
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn engine_matches_oracle(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let corpus = support::random_corpus(&mut rng, 60);
        let q = support::random_query(&mut rng, 4);
        let mask = support::random_mask(&mut rng);
        let ast = parse_query(&q.render()).unwrap();
        let got: BTreeSet<_> = run_query(&corpus, &ast, mask).ids.into_iter().collect();
        let want: BTreeSet<_> = corpus.iter().filter(|r| support::naive_match(r, &q, mask)).map(|r| r.id.clone()).collect();
        prop_assert_eq!(got, want, "{}", q.render());
    }

    #[test]
    fn canonical_text_parses_back(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let ast = parse_query(&support::random_query(&mut rng, 4).render()).unwrap();
        prop_assert_eq!(parse_query(&ast.to_string()).unwrap(), ast);
    }

    #[test]
    fn de_morgan_holds(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let corpus = support::random_corpus(&mut rng, 60);
        let a = parse_query(&support::random_query(&mut rng, 3).render()).unwrap();
        let b = parse_query(&support::random_query(&mut rng, 3).render()).unwrap();
        let mask = support::random_mask(&mut rng);
        let not = |x: &QueryAst| QueryAst::Not(Box::new(x.clone()));
        let lhs = run_query(&corpus, &not(&QueryAst::And(vec![a.clone(), b.clone()])), mask);
        let rhs = run_query(&corpus, &QueryAst::Or(vec![not(&a), not(&b)]), mask);
        prop_assert_eq!(lhs, rhs);
        let lhs = run_query(&corpus, &not(&QueryAst::Or(vec![a.clone(), b.clone()])), mask);
        let rhs = run_query(&corpus, &QueryAst::And(vec![not(&a), not(&b)]), mask);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dedup_recovers_planted_and_is_idempotent(records in 20usize..200, seed in any::<u64>()) {
        let mut p = planted_duplicates(records, seed);
        let first = dedup(&mut p.corpus, &DedupPolicy::default());
        prop_assert_eq!(first.pass1.len(), p.pass1_removed);
        prop_assert_eq!(first.pass2.len(), p.pass2_removed);
        prop_assert_eq!(p.corpus.len(), p.survivors);
        let snapshot = p.corpus.references().to_vec();
        let second = dedup(&mut p.corpus, &DedupPolicy::default());
        prop_assert!(second.pass1.is_empty() && second.pass2.is_empty());
        prop_assert_eq!(p.corpus.references(), snapshot.as_slice());
    }

    #[test]
    fn sample_size_is_monotone(
        population in 1u64..100_000,
        extra in 0u64..10_000,
        margin in 0.01f64..0.3,
        confidence in 0.8f64..0.99,
    ) {
        let n = sample_size(population, confidence, margin, 0.5).unwrap();
        prop_assert!((1..=population).contains(&n));
        prop_assert!(sample_size(population + extra, confidence, margin, 0.5).unwrap() >= n);
        prop_assert!(sample_size(population, confidence, margin * 1.2, 0.5).unwrap() <= n);
        prop_assert!(sample_size(population, (confidence + 0.009).min(0.999), margin, 0.5).unwrap() >= n);
    }

    #[test]
    fn margin_shrinks_with_sample(population in 2u64..50_000, a in 1u64..50_000, b in 1u64..50_000) {
        let (lo, hi) = (a.min(b).min(population), a.max(b).min(population));
        let m_lo = margin_of_error(lo, population, 0.95, 0.5).unwrap();
        let m_hi = margin_of_error(hi, population, 0.95, 0.5).unwrap();
        prop_assert!(m_hi <= m_lo + 1e-15);
        prop_assert!(m_hi >= 0.0);
    }

    #[test]
    fn keywording_stops_like_the_scanner(seq in prop::collection::vec(prop::bool::weighted(0.8), 0..40), seed in any::<u64>()) {
        let corpus = small_corpus(50);
        let mut s = ReviewSession::new("k", SessionKind::Keywording, seed, &corpus).unwrap();
        let mut fed = 0;
        for &related in &seq {
            if s.state() != SessionState::Active {
                break;
            }
            let Advance::Next(id) = s.advance(&corpus).unwrap() else { break };
            let v = if related {
                Verdict::Related
            } else {
                Verdict::FalsePositive { keywords: vec!["kw".into()], notes: String::new() }
            };
            s.record_verdict(&id, v).unwrap();
            fed += 1;
        }
        let got = (s.state() == SessionState::Complete).then_some(fed);
        prop_assert_eq!(got, support::brute_force_stop(&seq));
        let drawn: BTreeSet<_> = s.drawn().iter().collect();
        prop_assert_eq!(drawn.len(), s.drawn().len());
    }
}
