use crate::corpus::{Corpus, RefId, Reference};
use crate::text::tokenize;

use super::ast::{FieldMask, Pattern, QueryAst};

/// Token streams of one reference's searchable fields. Every keyword is its
/// own stream so phrases never span keyword boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedReference {
    title: Vec<String>,
    abstract_text: Vec<String>,
    keywords: Vec<Vec<String>>,
}

impl TokenizedReference {
    pub fn new(r: &Reference) -> Self {
        Self {
            title: tokenize(&r.title),
            abstract_text: r.abstract_text.as_deref().map(tokenize).unwrap_or_default(),
            keywords: r.keywords.iter().map(|k| tokenize(k)).collect(),
        }
    }

    fn streams(&self, mask: FieldMask) -> impl Iterator<Item = &[String]> {
        let title = mask.title().then_some(self.title.as_slice());
        let abstract_text = mask.abstract_text().then_some(self.abstract_text.as_slice());
        let keywords = self
            .keywords
            .iter()
            .filter(move |_| mask.keywords())
            .map(Vec::as_slice);
        title.into_iter().chain(abstract_text).chain(keywords)
    }

    pub fn matches(&self, ast: &QueryAst, mask: FieldMask) -> bool {
        match ast {
            QueryAst::Term(p) => self
                .streams(mask)
                .any(|s| s.iter().any(|tok| p.matches(tok))),
            QueryAst::Phrase(ps) => self.streams(mask).any(|s| phrase_in(s, ps)),
            QueryAst::And(c) => c.iter().all(|a| self.matches(a, mask)),
            QueryAst::Or(c) => c.iter().any(|a| self.matches(a, mask)),
            QueryAst::Not(c) => !self.matches(c, mask),
        }
    }
}

fn phrase_in(stream: &[String], patterns: &[Pattern]) -> bool {
    stream.len() >= patterns.len()
        && stream
            .windows(patterns.len())
            .any(|w| w.iter().zip(patterns).all(|(tok, p)| p.matches(tok)))
}

pub fn match_reference(r: &Reference, ast: &QueryAst, mask: FieldMask) -> bool {
    TokenizedReference::new(r).matches(ast, mask)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryResult {
    /// Matching ids in corpus order.
    pub ids: Vec<RefId>,
}

impl QueryResult {
    pub fn count(&self) -> usize {
        self.ids.len()
    }
}

/// Tokenized view of a corpus, built once and reused across queries.
pub struct CorpusIndex<'a> {
    entries: Vec<(&'a RefId, TokenizedReference)>,
}

impl<'a> CorpusIndex<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        Self {
            entries: corpus
                .iter()
                .map(|r| (&r.id, TokenizedReference::new(r)))
                .collect(),
        }
    }

    pub fn run(&self, ast: &QueryAst, mask: FieldMask) -> QueryResult {
        QueryResult {
            ids: self
                .entries
                .iter()
                .filter(|(_, t)| t.matches(ast, mask))
                .map(|(id, _)| (*id).clone())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn run_query(corpus: &Corpus, ast: &QueryAst, mask: FieldMask) -> QueryResult {
    CorpusIndex::new(corpus).run(ast, mask)
}
