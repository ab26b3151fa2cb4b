//! Sample sizes, seeded draws and human review sessions.

mod draw;
mod journal;
mod session;
mod stats;

pub use draw::{draw_sample, permutation_prefix};
pub use journal::{export_pool, JournalError, SessionStore};
pub use session::{
    corpus_digest, screening_verdicts, Advance, ReviewSession, SessionError, SessionKind,
    SessionMeta, SessionState, Verdict, STOPPING_STREAK,
};
pub use stats::{margin_of_error, normal_quantile, sample_size, z_for_confidence, SamplingError};
