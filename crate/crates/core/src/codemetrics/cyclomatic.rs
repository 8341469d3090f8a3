//! McCabe complexity per block, over a lightweight indentation parser.
//!
//! Blocks are functions and methods (named with their enclosing class or
//! function, dot-separated) plus a `<module>` block for top-level code. The
//! module block is reported when top-level code has decision points or when
//! the file defines no functions.
//!
//! Decision points: `if` (statement, conditional expression or
//! comprehension filter), `elif`, `for` (loop or comprehension clause),
//! `while`, each `except` clause and each `and` / `or` operator. `else` and
//! `finally` add nothing.

use serde::{Deserialize, Serialize};

use super::lexer::{self, LexDefect, LogicalLine, TokenKind};

pub const MODULE_BLOCK: &str = "<module>";

const COMPOUND_KEYWORDS: &[&str] = &[
    "if", "elif", "else", "for", "while", "try", "except", "finally", "with", "def", "class",
];

const DECISION_KEYWORDS: &[&str] = &["if", "elif", "for", "while", "except", "and", "or"];

/// Tokens that cannot end a complete statement.
const DANGLING_OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":=", "+", "-", "/", "%", "@", "&", "|", "^", "~",
    "<", ">", "(", "[", "{", ".", "=",
];

const DANGLING_KEYWORDS: &[&str] = &[
    "and", "or", "not", "in", "is", "if", "else", "elif", "lambda", "from", "import", "as",
    "assert", "await", "del", "global", "nonlocal", "for", "while", "with", "def", "class",
    "async", "except",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockComplexity {
    pub name: String,
    pub line: usize,
    pub complexity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CyclomaticError {
    #[error("line {line}: unexpected indent")]
    UnexpectedIndent { line: usize },
    #[error("line {line}: unindent does not match any outer indentation level")]
    InconsistentDedent { line: usize },
    #[error("line {line}: expected an indented block")]
    ExpectedIndentedBlock { line: usize },
    #[error("line {line}: compound statement header is missing its ':'")]
    TruncatedHeader { line: usize },
    #[error("line {line}: statement ends in the middle of an expression")]
    TruncatedStatement { line: usize },
    #[error("line {line}: compound statement after ':' on the same line")]
    CompoundInlineBody { line: usize },
    #[error("input ends inside {0} open bracket(s)")]
    UnclosedBrackets(usize),
    #[error("input ends with a line continuation")]
    DanglingContinuation,
    #[error("{0}")]
    Lexical(String),
}

impl From<LexDefect> for CyclomaticError {
    fn from(defect: LexDefect) -> Self {
        CyclomaticError::Lexical(defect.to_string())
    }
}

#[derive(Debug, Clone)]
enum Owner {
    Function(usize),
    Class(String),
    Inherit,
}

#[derive(Debug)]
struct Frame {
    indent: usize,
    owner: Owner,
}

struct Builder {
    frames: Vec<Frame>,
    blocks: Vec<BlockComplexity>,
    module_decisions: u32,
}

impl Builder {
    fn current_function(&self) -> Option<usize> {
        self.frames.iter().rev().find_map(|f| match f.owner {
            Owner::Function(idx) => Some(idx),
            _ => None,
        })
    }

    fn qualified_name(&self, name: &str) -> String {
        let mut parts: Vec<&str> = self
            .frames
            .iter()
            .filter_map(|f| match &f.owner {
                Owner::Function(idx) => Some(self.blocks[*idx].name.rsplit('.').next().unwrap_or("")),
                Owner::Class(class) => Some(class.as_str()),
                Owner::Inherit => None,
            })
            .collect();
        parts.push(name);
        parts.join(".")
    }

    fn add_decisions(&mut self, target: Option<usize>, count: u32) {
        match target {
            Some(idx) => self.blocks[idx].complexity += count,
            None => self.module_decisions += count,
        }
    }
}

fn decision_count(line: &LogicalLine<'_>) -> u32 {
    line.tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Keyword && DECISION_KEYWORDS.contains(&t.text))
        .count() as u32
}

/// Index of the first ':' outside brackets, if any.
fn top_level_colon(line: &LogicalLine<'_>) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in line.tokens.iter().enumerate() {
        if t.kind != TokenKind::Op {
            continue;
        }
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth = depth.saturating_sub(1),
            ":" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

enum LineShape {
    Simple,
    /// Header whose body follows on the next lines.
    OpensBlock,
    /// Header with its body on the same line.
    InlineBody,
}

fn shape<'a>(line: &LogicalLine<'a>) -> Result<(LineShape, Option<&'a str>), CyclomaticError> {
    let tokens = &line.tokens;
    let mut head = 0;
    if tokens.first().is_some_and(|t| t.text == "async") {
        head = 1;
    }
    let keyword = tokens
        .get(head)
        .filter(|t| t.kind == TokenKind::Keyword && COMPOUND_KEYWORDS.contains(&t.text))
        .map(|t| t.text);
    let colon = top_level_colon(line);
    if let Some(last) = tokens.last() {
        let dangling = match last.kind {
            TokenKind::Op => DANGLING_OPERATORS.contains(&last.text),
            TokenKind::Keyword => DANGLING_KEYWORDS.contains(&last.text),
            _ => false,
        };
        if dangling {
            return Err(match (keyword, colon) {
                (Some(_), None) => CyclomaticError::TruncatedHeader { line: line.line },
                _ => CyclomaticError::TruncatedStatement { line: line.line },
            });
        }
    }
    if let (Some(_), Some(i)) = (keyword, colon) {
        let after = &tokens[i + 1..];
        let starts_compound = after.first().is_some_and(|t| {
            t.kind == TokenKind::Keyword && (COMPOUND_KEYWORDS.contains(&t.text) || t.text == "async")
        });
        if starts_compound {
            return Err(CyclomaticError::CompoundInlineBody { line: line.line });
        }
    }
    match (keyword, colon) {
        (Some(_), None) => Err(CyclomaticError::TruncatedHeader { line: line.line }),
        (Some(kw), Some(i)) if i + 1 == tokens.len() => Ok((LineShape::OpensBlock, Some(kw))),
        (Some(kw), Some(_)) => Ok((LineShape::InlineBody, Some(kw))),
        // soft-keyword headers such as `match x:` / `case 1:`
        (None, Some(i)) if i + 1 == tokens.len() && tokens[0].kind == TokenKind::Name => {
            Ok((LineShape::OpensBlock, None))
        }
        (None, _) => Ok((LineShape::Simple, None)),
    }
}

pub fn cyclomatic_complexity(code: &str) -> Result<Vec<BlockComplexity>, CyclomaticError> {
    let lexed = lexer::lex(code);
    if let Some(defect) = lexed.defect {
        return Err(defect.into());
    }
    if lexed.open_brackets > 0 {
        return Err(CyclomaticError::UnclosedBrackets(lexed.open_brackets));
    }
    if lexed.dangling_continuation {
        return Err(CyclomaticError::DanglingContinuation);
    }

    let mut b = Builder {
        frames: vec![Frame {
            indent: 0,
            owner: Owner::Inherit,
        }],
        blocks: Vec::new(),
        module_decisions: 0,
    };
    let mut pending: Option<(Owner, usize)> = None;

    for line in &lexed.lines {
        let top = b.frames.last().map_or(0, |f| f.indent);
        if let Some((owner, header_line)) = pending.take() {
            if line.indent <= top {
                return Err(CyclomaticError::ExpectedIndentedBlock { line: header_line });
            }
            b.frames.push(Frame {
                indent: line.indent,
                owner,
            });
        } else if line.indent > top {
            return Err(CyclomaticError::UnexpectedIndent { line: line.line });
        } else if line.indent < top {
            while b.frames.len() > 1 && b.frames.last().is_some_and(|f| f.indent > line.indent) {
                b.frames.pop();
            }
            if b.frames.last().map_or(0, |f| f.indent) != line.indent {
                return Err(CyclomaticError::InconsistentDedent { line: line.line });
            }
        }

        let (line_shape, keyword) = shape(line)?;
        let decisions = decision_count(line);
        let head = usize::from(line.tokens.first().is_some_and(|t| t.text == "async"));
        let name = line
            .tokens
            .get(head + 1)
            .filter(|t| t.kind == TokenKind::Name)
            .map_or("<anonymous>", |t| t.text);

        let owner = match keyword {
            Some("def") => {
                let qualified = b.qualified_name(name);
                b.blocks.push(BlockComplexity {
                    name: qualified,
                    line: line.line,
                    complexity: 1,
                });
                let idx = b.blocks.len() - 1;
                b.add_decisions(Some(idx), decisions);
                Owner::Function(idx)
            }
            Some("class") => {
                let target = b.current_function();
                b.add_decisions(target, decisions);
                Owner::Class(name.to_string())
            }
            _ => {
                let target = b.current_function();
                b.add_decisions(target, decisions);
                Owner::Inherit
            }
        };
        if let LineShape::OpensBlock = line_shape {
            pending = Some((owner, line.line));
        }
    }
    if let Some((_, header_line)) = pending {
        return Err(CyclomaticError::ExpectedIndentedBlock { line: header_line });
    }

    let mut blocks = b.blocks;
    if b.module_decisions > 0 || (blocks.is_empty() && !lexed.lines.is_empty()) {
        blocks.insert(
            0,
            BlockComplexity {
                name: MODULE_BLOCK.to_string(),
                line: 1,
                complexity: 1 + b.module_decisions,
            },
        );
    }
    Ok(blocks)
}
