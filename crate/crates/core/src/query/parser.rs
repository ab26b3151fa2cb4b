//! Recursive-descent parser for the search language.
//!
//! ```text
//! query   = or ;
//! or      = and , { "OR" , and } ;
//! and     = unary , { "AND" , unary } ;
//! unary   = "NOT" , unary | primary ;
//! primary = "(" , or , ")" | phrase | word ;
//! phrase  = '"' , pattern , { ws , pattern } , '"' ;
//! word    = pattern ;
//! pattern = [ "*" ] , literal , [ "*" ] ;
//! ```
//!
//! Operators are case-insensitive. Two operands side by side with no
//! operator between them are rejected.

use std::fmt;

use crate::text::is_token_char;

use super::ast::{Pattern, QueryAst};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySyntaxError {
    /// Byte offset into the query text.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for QuerySyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.position, self.message)
    }
}

impl std::error::Error for QuerySyntaxError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Word(String),
    Quoted(String),
    End,
}

fn err(position: usize, message: impl Into<String>) -> QuerySyntaxError {
    QuerySyntaxError {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, QuerySyntaxError> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                toks.push((Tok::LParen, pos));
            }
            ')' => {
                chars.next();
                toks.push((Tok::RParen, pos));
            }
            '"' => {
                chars.next();
                let start = pos + 1;
                let mut end = None;
                for (p, c) in chars.by_ref() {
                    if c == '"' {
                        end = Some(p);
                        break;
                    }
                }
                let end = end.ok_or_else(|| err(pos, "unterminated quotation mark"))?;
                toks.push((Tok::Quoted(text[start..end].to_string()), pos));
            }
            _ => {
                let mut end = text.len();
                while let Some(&(p, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"') {
                        end = p;
                        break;
                    }
                    chars.next();
                }
                let word = &text[pos..end];
                let tok = if word.eq_ignore_ascii_case("and") {
                    Tok::And
                } else if word.eq_ignore_ascii_case("or") {
                    Tok::Or
                } else if word.eq_ignore_ascii_case("not") {
                    Tok::Not
                } else {
                    Tok::Word(word.to_string())
                };
                toks.push((tok, pos));
            }
        }
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

/// Splits raw text into patterns at characters that can never be part of a
/// token (anything but letters, digits, `-` and `*`).
fn patterns(raw: &str, position: usize) -> Result<Vec<Pattern>, QuerySyntaxError> {
    raw.split(|c: char| !(is_token_char(c) || c == '*'))
        .filter(|p| !p.is_empty())
        .map(|p| Pattern::parse(p).map_err(|e| err(position, e.0)))
        .collect()
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn or(&mut self) -> Result<QueryAst, QuerySyntaxError> {
        let mut children = vec![self.and()?];
        while self.peek().0 == Tok::Or {
            self.bump();
            children.push(self.and()?);
        }
        Ok(if children.len() == 1 {
            children.pop().expect("one child")
        } else {
            QueryAst::Or(children)
        })
    }

    fn and(&mut self) -> Result<QueryAst, QuerySyntaxError> {
        let mut children = vec![self.unary()?];
        while self.peek().0 == Tok::And {
            self.bump();
            children.push(self.unary()?);
        }
        Ok(if children.len() == 1 {
            children.pop().expect("one child")
        } else {
            QueryAst::And(children)
        })
    }

    fn unary(&mut self) -> Result<QueryAst, QuerySyntaxError> {
        if self.peek().0 == Tok::Not {
            self.bump();
            return Ok(QueryAst::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<QueryAst, QuerySyntaxError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::LParen => {
                if self.peek().0 == Tok::RParen {
                    return Err(err(self.peek().1, "empty parentheses"));
                }
                let inner = self.or()?;
                let (next, next_pos) = self.peek().clone();
                match next {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    Tok::End => Err(err(next_pos, format!("unclosed `(` opened at offset {pos}"))),
                    _ => Err(missing_operator(next_pos)),
                }
            }
            Tok::Quoted(text) => {
                let ps = patterns(&text, pos)?;
                if ps.is_empty() {
                    return Err(err(pos, "empty quoted phrase"));
                }
                Ok(QueryAst::Phrase(ps))
            }
            Tok::Word(word) => {
                let mut ps = patterns(&word, pos)?;
                match ps.len() {
                    0 => Err(err(pos, format!("`{word}` has no searchable characters"))),
                    1 => Ok(QueryAst::Term(ps.pop().expect("one pattern"))),
                    _ => Ok(QueryAst::Phrase(ps)),
                }
            }
            Tok::End => Err(err(pos, "unexpected end of query")),
            Tok::RParen => Err(err(pos, "unbalanced `)`")),
            Tok::And | Tok::Or | Tok::Not => Err(err(pos, "operator where an operand was expected")),
        }
    }
}

fn missing_operator(position: usize) -> QuerySyntaxError {
    err(
        position,
        "missing operator between operands (use AND, OR or NOT)",
    )
}

pub fn parse_query(text: &str) -> Result<QueryAst, QuerySyntaxError> {
    if text.trim().is_empty() {
        return Err(err(0, "empty query"));
    }
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let ast = p.or()?;
    let (tok, pos) = p.peek().clone();
    match tok {
        Tok::End => Ok(ast),
        Tok::RParen => Err(err(pos, "unbalanced `)`")),
        _ => Err(missing_operator(pos)),
    }
}
