//! Human review sessions over a read-only corpus snapshot.
//!
//! * keywording: draw references at random until ten consecutive ones are
//!   judged related; false positives contribute keywords to the exclusion
//!   pool and reset the streak.
//! * qa-audit: judge a fixed-size random sample.
//! * screening: judge a fixed list of flagged references, in order.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, RefId};

use super::draw::permutation_prefix;

/// Consecutive related verdicts that end a keywording session.
pub const STOPPING_STREAK: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SessionKind {
    Keywording,
    QaAudit { target: usize },
    Screening { queue: Vec<RefId> },
}

impl SessionKind {
    pub fn name(&self) -> &'static str {
        match self {
            SessionKind::Keywording => "keywording",
            SessionKind::QaAudit { .. } => "qa-audit",
            SessionKind::Screening { .. } => "screening",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Related,
    FalsePositive {
        #[serde(default)]
        keywords: Vec<String>,
        #[serde(default)]
        notes: String,
    },
}

impl Verdict {
    pub fn is_related(&self) -> bool {
        matches!(self, Verdict::Related)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Active,
    Complete,
    /// Every reference was drawn before the completion condition held.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Advance {
    Next(RefId),
    Complete,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("session is {0:?}, not active")]
    NotActive(SessionState),
    #[error("population exhausted before the session completed")]
    PopulationExhausted,
    #[error("reference {0} was not issued by this session")]
    NotIssued(RefId),
    #[error("reference {0} already has a verdict")]
    AlreadyJudged(RefId),
    #[error("audit target {target} exceeds population {population}")]
    Target { target: usize, population: usize },
    #[error("session was opened on a different corpus snapshot")]
    CorpusMismatch,
    #[error("screening queue holds ids missing from the corpus: {0:?}")]
    UnknownIds(Vec<RefId>),
}

/// Identity of a corpus snapshot: its ids in order.
pub fn corpus_digest(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    for id in corpus.ids() {
        h.update(id.as_str().as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..12])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    #[serde(flatten)]
    pub kind: SessionKind,
    pub seed: u64,
    pub corpus_digest: String,
    pub population: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReviewSession {
    meta: SessionMeta,
    drawn: Vec<RefId>,
    verdicts: BTreeMap<RefId, Verdict>,
    verdict_order: Vec<RefId>,
    clean_streak: usize,
    pool: Vec<String>,
    state: SessionState,
}

impl ReviewSession {
    pub fn new(
        id: impl Into<String>,
        kind: SessionKind,
        seed: u64,
        corpus: &Corpus,
    ) -> Result<Self, SessionError> {
        match &kind {
            SessionKind::QaAudit { target } if *target > corpus.len() => {
                return Err(SessionError::Target {
                    target: *target,
                    population: corpus.len(),
                });
            }
            SessionKind::Screening { queue } => {
                let known: HashSet<&RefId> = corpus.ids().collect();
                let missing: Vec<RefId> =
                    queue.iter().filter(|id| !known.contains(id)).cloned().collect();
                if !missing.is_empty() {
                    return Err(SessionError::UnknownIds(missing));
                }
            }
            _ => {}
        }
        Ok(Self::from_meta(SessionMeta {
            id: id.into(),
            kind,
            seed,
            corpus_digest: corpus_digest(corpus),
            population: corpus.len(),
        }))
    }

    pub(crate) fn from_meta(meta: SessionMeta) -> Self {
        let mut s = Self {
            meta,
            drawn: Vec::new(),
            verdicts: BTreeMap::new(),
            verdict_order: Vec::new(),
            clean_streak: 0,
            pool: Vec::new(),
            state: SessionState::Active,
        };
        s.refresh_state();
        s
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn kind(&self) -> &SessionKind {
        &self.meta.kind
    }

    pub fn drawn(&self) -> &[RefId] {
        &self.drawn
    }

    pub fn verdicts(&self) -> &BTreeMap<RefId, Verdict> {
        &self.verdicts
    }

    /// Verdicts in the order they were recorded.
    pub fn verdict_log(&self) -> impl Iterator<Item = (&RefId, &Verdict)> {
        self.verdict_order.iter().map(|id| (id, &self.verdicts[id]))
    }

    pub fn clean_streak(&self) -> usize {
        self.clean_streak
    }

    /// Exclusion keywords collected from false positives, first-seen order.
    pub fn pool(&self) -> &[String] {
        &self.pool
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn target(&self) -> Option<usize> {
        match &self.meta.kind {
            SessionKind::Keywording => None,
            SessionKind::QaAudit { target } => Some(*target),
            SessionKind::Screening { queue } => Some(queue.len()),
        }
    }

    /// The issued reference still waiting for a verdict, if any.
    pub fn pending(&self) -> Option<&RefId> {
        self.drawn.iter().find(|id| !self.verdicts.contains_key(*id))
    }

    fn completion_holds(&self) -> bool {
        match &self.meta.kind {
            SessionKind::Keywording => self.clean_streak >= STOPPING_STREAK,
            SessionKind::QaAudit { target } => self.verdicts.len() >= *target,
            SessionKind::Screening { queue } => self.verdicts.len() >= queue.len(),
        }
    }

    fn refresh_state(&mut self) {
        if self.state == SessionState::Active && self.completion_holds() {
            self.state = SessionState::Complete;
        }
    }

    /// Id the next draw would issue, without changing the session.
    pub fn peek_next(&self, corpus: &Corpus) -> Result<Advance, SessionError> {
        if self.state == SessionState::Complete {
            return Ok(Advance::Complete);
        }
        if self.state == SessionState::Exhausted {
            return Err(SessionError::NotActive(self.state));
        }
        if let Some(id) = self.pending() {
            return Ok(Advance::Next(id.clone()));
        }
        if corpus_digest(corpus) != self.meta.corpus_digest {
            return Err(SessionError::CorpusMismatch);
        }
        let k = self.drawn.len();
        match &self.meta.kind {
            SessionKind::Screening { queue } => queue
                .get(k)
                .cloned()
                .map(Advance::Next)
                .ok_or(SessionError::PopulationExhausted),
            _ if k >= corpus.len() => Err(SessionError::PopulationExhausted),
            _ => {
                let idx = permutation_prefix(corpus.len(), k + 1, self.meta.seed)[k];
                Ok(Advance::Next(corpus.references()[idx].id.clone()))
            }
        }
    }

    /// Issues the next reference to judge. Re-issues the pending one if the
    /// last issued reference has no verdict yet.
    pub fn advance(&mut self, corpus: &Corpus) -> Result<Advance, SessionError> {
        let pending = self.pending().cloned();
        match self.peek_next(corpus) {
            Ok(Advance::Next(id)) => {
                if pending.as_ref() != Some(&id) {
                    self.apply_draw(id.clone());
                }
                Ok(Advance::Next(id))
            }
            Ok(Advance::Complete) => Ok(Advance::Complete),
            Err(SessionError::PopulationExhausted) => {
                self.state = SessionState::Exhausted;
                Err(SessionError::PopulationExhausted)
            }
            Err(e) => Err(e),
        }
    }

    pub(crate) fn apply_draw(&mut self, id: RefId) {
        self.drawn.push(id);
    }

    pub(crate) fn mark_exhausted(&mut self) {
        self.state = SessionState::Exhausted;
    }

    /// Validates a verdict without applying it.
    pub fn check_verdict(&self, id: &RefId) -> Result<(), SessionError> {
        if self.state != SessionState::Active {
            return Err(SessionError::NotActive(self.state));
        }
        if !self.drawn.contains(id) {
            return Err(SessionError::NotIssued(id.clone()));
        }
        if self.verdicts.contains_key(id) {
            return Err(SessionError::AlreadyJudged(id.clone()));
        }
        Ok(())
    }

    pub fn record_verdict(&mut self, id: &RefId, verdict: Verdict) -> Result<(), SessionError> {
        self.check_verdict(id)?;
        match &verdict {
            Verdict::Related => self.clean_streak += 1,
            Verdict::FalsePositive { keywords, .. } => {
                self.clean_streak = 0;
                for k in keywords {
                    let k = k.trim();
                    if !k.is_empty() && !self.pool.iter().any(|p| p.eq_ignore_ascii_case(k)) {
                        self.pool.push(k.to_string());
                    }
                }
            }
        }
        self.verdicts.insert(id.clone(), verdict);
        self.verdict_order.push(id.clone());
        self.refresh_state();
        Ok(())
    }
}

/// Ids flagged `false-positive` (remove) and `related` (keep), for feeding
/// a finished screening session into the exclusion stage.
pub fn screening_verdicts(
    session: &ReviewSession,
) -> BTreeMap<RefId, crate::curation::ScreeningVerdict> {
    use crate::curation::ScreeningVerdict;
    session
        .verdicts
        .iter()
        .map(|(id, v)| {
            let s = if v.is_related() {
                ScreeningVerdict::Keep
            } else {
                ScreeningVerdict::Remove
            };
            (id.clone(), s)
        })
        .collect()
}
