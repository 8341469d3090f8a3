//! Python surface lexer.
//!
//! Produces tokens grouped into logical lines (a logical line ends at a
//! newline outside brackets and not preceded by a backslash). Lexing stops at
//! the first defect: an unterminated string or a character that cannot start
//! any token.

use std::fmt;

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

/// Keywords that denote values and therefore count as operands.
pub const CONSTANT_KEYWORDS: &[&str] = &["False", "None", "True"];

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

const STRING_PREFIXES: &[&str] = &["r", "u", "b", "f", "br", "rb", "fr", "rf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Keyword,
    Number,
    Str,
    Op,
    Comment,
    Newline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// 1-based physical line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexDefect {
    UnterminatedString { line: usize },
    StrayCharacter { line: usize, ch: char },
    UnbalancedBracket { line: usize },
}

impl fmt::Display for LexDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexDefect::UnterminatedString { line } => write!(f, "unterminated string starting on line {line}"),
            LexDefect::StrayCharacter { line, ch } => write!(f, "unexpected character {ch:?} on line {line}"),
            LexDefect::UnbalancedBracket { line } => write!(f, "unbalanced closing bracket on line {line}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalLine<'a> {
    /// Indentation width of the first physical line (tabs advance to the next
    /// multiple of eight).
    pub indent: usize,
    pub line: usize,
    /// Significant tokens only: no comments, no newlines.
    pub tokens: Vec<Token<'a>>,
}

#[derive(Debug, Clone, Default)]
pub struct Lexed<'a> {
    /// Every token in source order, comments and logical newlines included.
    pub tokens: Vec<Token<'a>>,
    pub lines: Vec<LogicalLine<'a>>,
    pub defect: Option<LexDefect>,
    /// Brackets still open at end of input.
    pub open_brackets: usize,
    /// Input ended right after a line-continuation backslash.
    pub dangling_continuation: bool,
}

impl Lexed<'_> {
    pub fn is_dirty(&self) -> bool {
        self.defect.is_some()
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    depth: usize,
    at_line_start: bool,
    continuation: bool,
    out: Lexed<'a>,
    current: Option<LogicalLine<'a>>,
}

pub fn lex(src: &str) -> Lexed<'_> {
    let mut lexer = Lexer {
        src,
        pos: 0,
        line: 1,
        depth: 0,
        at_line_start: true,
        continuation: false,
        out: Lexed::default(),
        current: None,
    };
    lexer.run();
    let mut out = lexer.out;
    if let Some(line) = lexer.current.take() {
        out.lines.push(line);
    }
    out.open_brackets = lexer.depth;
    out.dangling_continuation = lexer.continuation;
    out
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset_chars: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset_chars)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize) {
        let token = Token {
            kind,
            text: &self.src[start..self.pos],
            line,
        };
        self.out.tokens.push(token);
        if kind == TokenKind::Comment {
            return;
        }
        if let Some(current) = self.current.as_mut() {
            current.tokens.push(token);
        }
    }

    fn end_logical_line(&mut self) {
        if let Some(line) = self.current.take() {
            if !line.tokens.is_empty() {
                self.out.tokens.push(Token {
                    kind: TokenKind::Newline,
                    text: "",
                    line: self.line,
                });
                self.out.lines.push(line);
            }
        }
    }

    /// Measures leading whitespace; returns `None` for blank or comment-only
    /// lines, which do not start a logical line.
    fn measure_indent(&mut self) -> Option<usize> {
        let mut width = 0;
        while let Some(c) = self.peek() {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / 8 + 1) * 8,
                '\x0c' => width = 0,
                _ => break,
            }
            self.pos += c.len_utf8();
        }
        match self.peek() {
            None | Some('\n') | Some('#') => None,
            Some('\r') if self.peek_at(1) == Some('\n') || self.peek_at(1).is_none() => None,
            _ => Some(width),
        }
    }

    fn run(&mut self) {
        while self.pos < self.src.len() {
            if self.at_line_start {
                self.at_line_start = false;
                if self.depth == 0 && !self.continuation {
                    if let Some(indent) = self.measure_indent() {
                        self.current = Some(LogicalLine {
                            indent,
                            line: self.line,
                            tokens: Vec::new(),
                        });
                    }
                    continue;
                }
                self.continuation = false;
            }
            let Some(c) = self.peek() else { break };
            let start = self.pos;
            let line = self.line;
            match c {
                '\n' => {
                    self.pos += 1;
                    if self.depth == 0 && !self.continuation {
                        self.end_logical_line();
                    }
                    self.line += 1;
                    self.at_line_start = true;
                }
                ' ' | '\t' | '\r' | '\x0c' => self.pos += 1,
                '#' => {
                    let len = self.rest().find('\n').unwrap_or(self.rest().len());
                    self.pos += len;
                    self.push(TokenKind::Comment, start, line);
                }
                '\\' => {
                    let next = self.peek_at(1);
                    if next == Some('\n') || (next == Some('\r') && self.peek_at(2) == Some('\n')) {
                        // the newline itself is handled by the '\n' arm
                        self.pos += if next == Some('\r') { 2 } else { 1 };
                        self.continuation = true;
                    } else if next.is_none() {
                        self.pos += 1;
                        self.continuation = true;
                    } else {
                        self.out.defect = Some(LexDefect::StrayCharacter { line, ch: c });
                        return;
                    }
                }
                '"' | '\'' => {
                    if !self.string(start, line) {
                        return;
                    }
                }
                c if c.is_ascii_digit() => self.number(start, line),
                '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number(start, line),
                c if is_ident_start(c) => {
                    while self.peek().is_some_and(is_ident_continue) {
                        self.pos += self.peek().map_or(0, char::len_utf8);
                    }
                    let word = &self.src[start..self.pos];
                    if matches!(self.peek(), Some('"' | '\''))
                        && STRING_PREFIXES.contains(&word.to_ascii_lowercase().as_str())
                    {
                        if !self.string(start, line) {
                            return;
                        }
                    } else if KEYWORDS.contains(&word) {
                        self.push(TokenKind::Keyword, start, line);
                    } else {
                        self.push(TokenKind::Name, start, line);
                    }
                }
                _ => {
                    let Some(op) = OPERATORS.iter().find(|op| self.rest().starts_with(**op)) else {
                        self.out.defect = Some(LexDefect::StrayCharacter { line, ch: c });
                        return;
                    };
                    match *op {
                        "(" | "[" | "{" => self.depth += 1,
                        ")" | "]" | "}" => {
                            if self.depth == 0 {
                                self.out.defect = Some(LexDefect::UnbalancedBracket { line });
                                return;
                            }
                            self.depth -= 1;
                        }
                        _ => {}
                    }
                    self.pos += op.len();
                    self.push(TokenKind::Op, start, line);
                }
            }
        }
    }

    fn number(&mut self, start: usize, line: usize) {
        let hex = self.rest().starts_with("0x") || self.rest().starts_with("0X");
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.pos += 1;
                if !hex && matches!(c, 'e' | 'E') && matches!(self.peek(), Some('+' | '-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        self.push(TokenKind::Number, start, line);
    }

    /// Consumes a string literal whose prefix (if any) starts at `start` and
    /// whose opening quote is at the current position.
    fn string(&mut self, start: usize, line: usize) -> bool {
        let quote = self.peek().expect("caller checked for a quote");
        let triple: String = std::iter::repeat_n(quote, 3).collect();
        let is_triple = self.rest().starts_with(&triple);
        self.pos += if is_triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek() else {
                self.out.defect = Some(LexDefect::UnterminatedString { line });
                return false;
            };
            match c {
                '\\' => {
                    self.pos += 1;
                    if let Some(next) = self.peek() {
                        if next == '\n' {
                            self.line += 1;
                        }
                        self.pos += next.len_utf8();
                    }
                }
                '\n' if !is_triple => {
                    self.out.defect = Some(LexDefect::UnterminatedString { line });
                    return false;
                }
                '\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c == quote => {
                    if !is_triple {
                        self.pos += 1;
                        break;
                    }
                    if self.rest().starts_with(&triple) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                c => self.pos += c.len_utf8(),
            }
        }
        self.push(TokenKind::Str, start, line);
        true
    }
}
