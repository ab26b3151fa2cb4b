use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::fold;

/// Where a pattern's `*` wildcards sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wildcard {
    /// `word`
    None,
    /// `word*`
    Prefix,
    /// `*word`
    Suffix,
    /// `*word*`
    Infix,
}

/// One search word: folded literal text plus wildcard placement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    text: String,
    wildcard: Wildcard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternError(pub String);

impl Pattern {
    /// Parses `word`, `word*`, `*word` or `*word*`.
    pub fn parse(raw: &str) -> Result<Self, PatternError> {
        let (leading, rest) = match raw.strip_prefix('*') {
            Some(r) => (true, r),
            None => (false, raw),
        };
        let (trailing, core) = match rest.strip_suffix('*') {
            Some(c) => (true, c),
            None => (false, rest),
        };
        if core.is_empty() {
            return Err(PatternError(format!("pattern `{raw}` has no literal text")));
        }
        if core.contains('*') {
            return Err(PatternError(format!(
                "pattern `{raw}`: `*` is only allowed at the start or end of a word"
            )));
        }
        if core.chars().any(char::is_whitespace) {
            return Err(PatternError(format!("pattern `{raw}` contains whitespace")));
        }
        let wildcard = match (leading, trailing) {
            (false, false) => Wildcard::None,
            (false, true) => Wildcard::Prefix,
            (true, false) => Wildcard::Suffix,
            (true, true) => Wildcard::Infix,
        };
        Ok(Self {
            text: fold(core),
            wildcard,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn wildcard(&self) -> Wildcard {
        self.wildcard
    }

    /// `token` must already be folded.
    pub fn matches(&self, token: &str) -> bool {
        match self.wildcard {
            Wildcard::None => token == self.text,
            Wildcard::Prefix => token.starts_with(&self.text),
            Wildcard::Suffix => token.ends_with(&self.text),
            Wildcard::Infix => token.contains(&self.text),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pre, post) = match self.wildcard {
            Wildcard::None => ("", ""),
            Wildcard::Prefix => ("", "*"),
            Wildcard::Suffix => ("*", ""),
            Wildcard::Infix => ("*", "*"),
        };
        write!(f, "{pre}{}{post}", self.text)
    }
}

/// Parsed search expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryAst {
    Term(Pattern),
    /// Consecutive tokens, each matching its pattern.
    Phrase(Vec<Pattern>),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
    Not(Box<QueryAst>),
}

impl QueryAst {
    pub fn term(raw: &str) -> Result<Self, PatternError> {
        Pattern::parse(raw).map(QueryAst::Term)
    }

    pub fn phrase(raw: &str) -> Result<Self, PatternError> {
        let patterns = raw
            .split_whitespace()
            .map(Pattern::parse)
            .collect::<Result<Vec<_>, _>>()?;
        if patterns.is_empty() {
            return Err(PatternError("empty phrase".to_string()));
        }
        Ok(QueryAst::Phrase(patterns))
    }

    /// Checks arity rules for hand-built trees.
    pub fn validate(&self) -> Result<(), PatternError> {
        match self {
            QueryAst::Term(_) => Ok(()),
            QueryAst::Phrase(p) if p.is_empty() => Err(PatternError("empty phrase".into())),
            QueryAst::Phrase(_) => Ok(()),
            QueryAst::And(c) | QueryAst::Or(c) if c.len() < 2 => {
                Err(PatternError("AND/OR need at least two operands".into()))
            }
            QueryAst::And(c) | QueryAst::Or(c) => c.iter().try_for_each(QueryAst::validate),
            QueryAst::Not(c) => c.validate(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            QueryAst::Term(_) | QueryAst::Phrase(_) => 1,
            QueryAst::And(c) | QueryAst::Or(c) => 1 + c.iter().map(QueryAst::depth).max().unwrap_or(0),
            QueryAst::Not(c) => 1 + c.depth(),
        }
    }
}

/// Canonical text form; parses back to an equal tree.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::Term(p) => write!(f, "{p}"),
            QueryAst::Phrase(ps) => {
                f.write_str("\"")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("\"")
            }
            QueryAst::And(c) | QueryAst::Or(c) => {
                let op = if matches!(self, QueryAst::And(_)) { " AND " } else { " OR " };
                f.write_str("(")?;
                for (i, child) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{child}")?;
                }
                f.write_str(")")
            }
            QueryAst::Not(c) => write!(f, "NOT {c}"),
        }
    }
}

/// Metadata fields a query is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldMask {
    title: bool,
    #[serde(rename = "abstract")]
    abstract_text: bool,
    keywords: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskError(pub String);

impl fmt::Display for MaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for MaskError {}

impl FieldMask {
    pub const ALL: FieldMask = FieldMask {
        title: true,
        abstract_text: true,
        keywords: true,
    };
    pub const TITLE: FieldMask = FieldMask {
        title: true,
        abstract_text: false,
        keywords: false,
    };
    pub const ABSTRACT: FieldMask = FieldMask {
        title: false,
        abstract_text: true,
        keywords: false,
    };
    pub const KEYWORDS: FieldMask = FieldMask {
        title: false,
        abstract_text: false,
        keywords: true,
    };

    pub fn new(title: bool, abstract_text: bool, keywords: bool) -> Result<Self, MaskError> {
        if !(title || abstract_text || keywords) {
            return Err(MaskError("field mask must select at least one field".into()));
        }
        Ok(Self {
            title,
            abstract_text,
            keywords,
        })
    }

    pub fn title(&self) -> bool {
        self.title
    }

    pub fn abstract_text(&self) -> bool {
        self.abstract_text
    }

    pub fn keywords(&self) -> bool {
        self.keywords
    }
}

impl Default for FieldMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// Accepts `all` or field names joined by `,` or `+`
/// (`title+abstract+keywords`).
impl FromStr for FieldMask {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        let (mut t, mut a, mut k) = (false, false, false);
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "title" | "ti" => t = true,
                "abstract" | "ab" => a = true,
                "keywords" | "keyword" | "kw" => k = true,
                other => return Err(MaskError(format!("unknown field `{other}`"))),
            }
        }
        Self::new(t, a, k)
    }
}

impl fmt::Display for FieldMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.title, "title"),
            (self.abstract_text, "abstract"),
            (self.keywords, "keywords"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        f.write_str(&names.join("+"))
    }
}
