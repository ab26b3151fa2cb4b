//! Boolean search language with phrases and `*` wildcards.
//!
//! Text in the selected fields is split into folded tokens (maximal runs of
//! letters, digits and hyphens, diacritics stripped). A term matches a token
//! exactly, by prefix (`word*`), by suffix (`*word`) or as a substring
//! (`*word*`); a phrase matches consecutive tokens inside one field.

mod ast;
mod eval;
mod parser;

pub use ast::{FieldMask, MaskError, Pattern, PatternError, QueryAst, Wildcard};
pub use eval::{match_reference, run_query, CorpusIndex, QueryResult, TokenizedReference};
pub use parser::{parse_query, QuerySyntaxError};

/// The master search string used to retrieve the community-detection corpus,
/// verbatim.
pub const MASTER_QUERY: &str = r#"("communit detection" OR "graph clustering" OR "communit* structure") AND (algorithm* OR method*) AND (network* OR graph*)"#;

/// Same string with the first phrase wildcarded like the third one.
pub const MASTER_QUERY_CORRECTED: &str = r#"("communit* detection" OR "graph clustering" OR "communit* structure") AND (algorithm* OR method*) AND (network* OR graph*)"#;
