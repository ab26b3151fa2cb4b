//! Independent oracles and generators shared by integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mapstudy_core::query::FieldMask;
use mapstudy_core::{Corpus, Ledger, Reference, SourceDb};

const VOCAB: &[&str] = &[
    "graph", "graphs", "Graph", "community", "communities", "Communit", "detection", "clustering", "cluster",
    "fuzzy", "c-means", "c-mean", "overlapping", "CFinder", "network", "networks", "host-parasite", "parasite",
    "spectral", "modularity", "method", "methods", "algorithm", "algorithms", "structure", "dynamic", "ab",
    "ba", "aab", "bab", "x2", "2016",
];

const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", ". ", " (", ") ", ": ", " / "];

/// Query tree mirrored outside the crate so the oracle shares no code with
/// the engine.
#[derive(Debug, Clone)]
pub enum Q {
    Term(String),
    Phrase(Vec<String>),
    And(Vec<Q>),
    Or(Vec<Q>),
    Not(Box<Q>),
}

impl Q {
    pub fn render(&self) -> String {
        match self {
            Q::Term(p) => p.clone(),
            Q::Phrase(ps) => format!("\"{}\"", ps.join(" ")),
            Q::And(c) => format!("({})", c.iter().map(Q::render).collect::<Vec<_>>().join(" AND ")),
            Q::Or(c) => format!("({})", c.iter().map(Q::render).collect::<Vec<_>>().join(" or ")),
            Q::Not(c) => format!("NOT {}", c.render()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Q::Term(_) | Q::Phrase(_) => 1,
            Q::And(c) | Q::Or(c) => 1 + c.iter().map(Q::depth).max().unwrap(),
            Q::Not(c) => 1 + c.depth(),
        }
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn pattern_matches(pattern: &str, token: &str) -> bool {
    let p = pattern.to_lowercase();
    let lead = p.starts_with('*');
    let trail = p.len() > 1 && p.ends_with('*');
    let core = p.trim_matches('*');
    match (lead, trail) {
        (false, false) => token == core,
        (false, true) => token.starts_with(core),
        (true, false) => token.ends_with(core),
        (true, true) => token.contains(core),
    }
}

fn streams(r: &Reference, mask: FieldMask) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if mask.title() {
        out.push(tokens(&r.title));
    }
    if mask.abstract_text() {
        out.push(tokens(r.abstract_text.as_deref().unwrap_or("")));
    }
    if mask.keywords() {
        out.extend(r.keywords.iter().map(|k| tokens(k)));
    }
    out
}

/// Brute-force evaluation: rescans every field for every node.
pub fn naive_match(r: &Reference, q: &Q, mask: FieldMask) -> bool {
    match q {
        Q::Term(p) => streams(r, mask).iter().flatten().any(|t| pattern_matches(p, t)),
        Q::Phrase(ps) => streams(r, mask).iter().any(|s| {
            (0..s.len()).any(|start| {
                start + ps.len() <= s.len() && ps.iter().enumerate().all(|(i, p)| pattern_matches(p, &s[start + i]))
            })
        }),
        Q::And(c) => c.iter().all(|x| naive_match(r, x, mask)),
        Q::Or(c) => c.iter().any(|x| naive_match(r, x, mask)),
        Q::Not(c) => !naive_match(r, c, mask),
    }
}

fn text(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut s = String::new();
    for i in 0..words {
        if i > 0 {
            s.push_str(SEPARATORS.choose(rng).unwrap());
        }
        s.push_str(VOCAB.choose(rng).unwrap());
    }
    s
}

pub fn random_corpus(rng: &mut ChaCha8Rng, max_records: usize) -> Corpus {
    let n = rng.random_range(1..=max_records);
    let refs = (0..n)
        .map(|i| {
            let words = rng.random_range(1..=8);
            let mut r = Reference::new(format!("r{i}"), text(rng, words), SourceDb::new("gen"));
            if rng.random_bool(0.7) {
                let words = rng.random_range(0..=20);
                r.abstract_text = Some(text(rng, words));
            }
            let nk = rng.random_range(0..=3);
            r.keywords = (0..nk)
                .map(|_| {
                    let words = rng.random_range(1..=3);
                    text(rng, words)
                })
                .collect();
            r.year = Some(rng.random_range(1995..=2016));
            r
        })
        .collect();
    Corpus::from_parts(refs, Ledger::new(), NaiveDate::from_ymd_opt(2016, 4, 26).unwrap()).unwrap()
}

fn random_pattern(rng: &mut ChaCha8Rng) -> String {
    let word = VOCAB.choose(rng).unwrap().to_string();
    let core = if rng.random_bool(0.5) {
        word
    } else {
        let chars: Vec<char> = word.chars().collect();
        let a = rng.random_range(0..chars.len());
        let b = rng.random_range(a + 1..=chars.len());
        chars[a..b].iter().collect::<String>()
    };
    let core = core.trim_matches('-');
    let core = if core.is_empty() || ["or", "and", "not"].contains(&core.to_lowercase().as_str()) {
        "graph"
    } else {
        core
    };
    match rng.random_range(0..4) {
        0 => core.to_string(),
        1 => format!("{core}*"),
        2 => format!("*{core}"),
        _ => format!("*{core}*"),
    }
}

/// Random query tree of depth at most `depth`.
pub fn random_query(rng: &mut ChaCha8Rng, depth: usize) -> Q {
    if depth <= 1 || rng.random_bool(0.3) {
        return if rng.random_bool(0.3) {
            let n = rng.random_range(1..=3);
            Q::Phrase((0..n).map(|_| random_pattern(rng)).collect())
        } else {
            Q::Term(random_pattern(rng))
        };
    }
    match rng.random_range(0..5) {
        0 => Q::Not(Box::new(random_query(rng, depth - 1))),
        k => {
            let n = rng.random_range(2..=3);
            let c = (0..n).map(|_| random_query(rng, depth - 1)).collect();
            if k % 2 == 0 {
                Q::And(c)
            } else {
                Q::Or(c)
            }
        }
    }
}

pub fn random_mask(rng: &mut ChaCha8Rng) -> FieldMask {
    loop {
        let (t, a, k) = (rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5));
        if let Ok(m) = FieldMask::new(t, a, k) {
            return m;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// First verdict index (1-based) after which the last ten or more verdicts
/// are all related and follow the last false positive, found by rescanning
/// every prefix.
pub fn brute_force_stop(related: &[bool]) -> Option<usize> {
    (1..=related.len()).find(|&end| {
        let prefix = &related[..end];
        let last_fp = prefix.iter().rposition(|r| !r);
        let suffix = match last_fp {
            Some(i) => &prefix[i + 1..],
            None => prefix,
        };
        suffix.len() >= 10 && suffix.iter().all(|&r| r)
    })
}
