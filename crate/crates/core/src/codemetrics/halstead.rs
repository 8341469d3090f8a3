//! File-wide Halstead counts and derived measures.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::lexer::{self, TokenKind, CONSTANT_KEYWORDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Operator,
    Operand,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedToken {
    pub lexeme: String,
    pub class: TokenClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<ClassifiedToken>,
    /// Set when lexing stopped at an unterminated string or stray character.
    pub dirty: bool,
}

/// Splits source into operator / operand / ignored lexemes.
///
/// Keywords, punctuation, delimiters and operators are operators; names,
/// numeric and string literals and the value keywords `True`, `False`,
/// `None` are operands; comments and newlines are ignored.
pub fn tokenize_source(code: &str) -> TokenStream {
    let lexed = lexer::lex(code);
    let tokens = lexed
        .tokens
        .iter()
        .map(|t| {
            let class = match t.kind {
                TokenKind::Keyword if CONSTANT_KEYWORDS.contains(&t.text) => TokenClass::Operand,
                TokenKind::Keyword | TokenKind::Op => TokenClass::Operator,
                TokenKind::Name | TokenKind::Number | TokenKind::Str => TokenClass::Operand,
                TokenKind::Comment | TokenKind::Newline => TokenClass::Ignore,
            };
            let lexeme = if t.kind == TokenKind::Newline { "\n" } else { t.text };
            ClassifiedToken {
                lexeme: lexeme.to_string(),
                class,
            }
        })
        .collect();
    TokenStream {
        tokens,
        dirty: lexed.is_dirty(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HalsteadMetrics {
    /// n1
    pub distinct_operators: usize,
    /// n2
    pub distinct_operands: usize,
    /// N1
    pub total_operators: usize,
    /// N2
    pub total_operands: usize,
    pub vocabulary: usize,
    pub length: usize,
    pub volume: f64,
    pub difficulty: f64,
    pub effort: f64,
    pub bugs: f64,
}

impl HalsteadMetrics {
    pub fn from_counts(n1: usize, n2: usize, big_n1: usize, big_n2: usize) -> Self {
        let vocabulary = n1 + n2;
        let length = big_n1 + big_n2;
        let volume = if vocabulary >= 2 {
            length as f64 * (vocabulary as f64).log2()
        } else {
            0.0
        };
        let difficulty = if n2 > 0 {
            (n1 as f64 / 2.0) * (big_n2 as f64 / n2 as f64)
        } else {
            0.0
        };
        Self {
            distinct_operators: n1,
            distinct_operands: n2,
            total_operators: big_n1,
            total_operands: big_n2,
            vocabulary,
            length,
            volume,
            difficulty,
            effort: difficulty * volume,
            bugs: volume / 3000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalsteadResult {
    pub metrics: HalsteadMetrics,
    pub dirty: bool,
}

pub fn halstead(code: &str) -> HalsteadResult {
    let stream = tokenize_source(code);
    let mut operators = HashSet::new();
    let mut operands = HashSet::new();
    let (mut total_operators, mut total_operands) = (0, 0);
    for token in &stream.tokens {
        match token.class {
            TokenClass::Operator => {
                total_operators += 1;
                operators.insert(token.lexeme.as_str());
            }
            TokenClass::Operand => {
                total_operands += 1;
                operands.insert(token.lexeme.as_str());
            }
            TokenClass::Ignore => {}
        }
    }
    HalsteadResult {
        metrics: HalsteadMetrics::from_counts(operators.len(), operands.len(), total_operators, total_operands),
        dirty: stream.dirty,
    }
}
