//! Text-based clone-similarity scores between an original program and a
//! completed duplicate.
//!
//! Four algorithms are computed for every comparison:
//!
//! - Ratcliff-Obershelp similarity, `2M / (|a| + |b|)`
//! - Jaro-Winkler similarity (scaling 0.1, prefix capped at 4)
//! - Hamming distance, with the length gap counted as mismatches
//! - unrestricted Damerau-Levenshtein distance
//!
//! Every algorithm works on Unicode scalar values. Comparisons run either on
//! whole files or on the generated fragment against the original text found
//! at the same location.

mod edit;
mod jaro;
mod ratcliff;

pub use edit::{
    damerau_levenshtein, damerau_levenshtein_cells, damerau_levenshtein_chars,
    damerau_levenshtein_within, hamming, hamming_chars,
};
pub use jaro::{jaro, jaro_chars, jaro_winkler, jaro_winkler_chars, WinklerParams};
pub use ratcliff::{matched_chars, ratcliff_obershelp, ratcliff_obershelp_chars};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::SourceSample;
use crate::prefixer::{byte_offset, DuplicateProgram};

/// Default cap on dynamic-programming cells for one distance computation.
pub const DEFAULT_DP_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("Jaro-Winkler scaling {scaling} with max prefix {max_prefix} can exceed 1.0")]
    WinklerParams { scaling: f64, max_prefix: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    WholeFile,
    Fragment,
}

impl ComparisonMode {
    pub const ALL: [ComparisonMode; 2] = [ComparisonMode::WholeFile, ComparisonMode::Fragment];

    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonMode::WholeFile => "whole_file",
            ComparisonMode::Fragment => "fragment",
        }
    }
}

impl fmt::Display for ComparisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ComparisonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "whole_file" | "whole" => Ok(ComparisonMode::WholeFile),
            "fragment" | "frag" => Ok(ComparisonMode::Fragment),
            other => Err(format!("unknown comparison mode {other:?}")),
        }
    }
}

/// The texts being scored, in comparison order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonPair {
    pub reference: String,
    pub candidate: String,
    pub mode: ComparisonMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub mode: ComparisonMode,
    pub ratcliff_obershelp: f64,
    pub jaro_winkler: f64,
    pub hamming: usize,
    /// `None` when the pair exceeded the dynamic-programming budget.
    pub damerau_levenshtein: Option<usize>,
    pub reference_chars: usize,
    pub candidate_chars: usize,
}

impl SimilarityScores {
    pub fn is_oversize(&self) -> bool {
        self.damerau_levenshtein.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareOptions {
    /// Cut the original's remainder to the generated length in fragment mode.
    pub fragment_truncation: bool,
    pub dp_budget: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            fragment_truncation: true,
            dp_budget: DEFAULT_DP_BUDGET,
        }
    }
}

/// Original characters `[boundary, boundary + generated_length)`, clamped to
/// the end of the sample.
pub fn extract_reference_fragment(sample: &SourceSample, boundary: usize, generated_length: usize) -> &str {
    let start = byte_offset(&sample.content, boundary);
    let rest = &sample.content[start..];
    &rest[..byte_offset(rest, generated_length)]
}

pub fn comparison_pair(
    original: &SourceSample,
    duplicate: &DuplicateProgram,
    mode: ComparisonMode,
    options: &CompareOptions,
) -> ComparisonPair {
    match mode {
        ComparisonMode::WholeFile => ComparisonPair {
            reference: original.content.clone(),
            candidate: duplicate.content.clone(),
            mode,
        },
        ComparisonMode::Fragment => {
            let boundary = duplicate.ratio.boundary(original.char_count);
            let length = if options.fragment_truncation {
                duplicate.generated.chars().count()
            } else {
                usize::MAX
            };
            ComparisonPair {
                reference: extract_reference_fragment(original, boundary, length).to_string(),
                candidate: duplicate.generated.clone(),
                mode,
            }
        }
    }
}

pub fn score_pair(pair: &ComparisonPair, options: &CompareOptions) -> SimilarityScores {
    let reference: Vec<char> = pair.reference.chars().collect();
    let candidate: Vec<char> = pair.candidate.chars().collect();
    SimilarityScores {
        mode: pair.mode,
        ratcliff_obershelp: ratcliff_obershelp_chars(&reference, &candidate),
        jaro_winkler: jaro_winkler_chars(&reference, &candidate, WinklerParams::default()),
        hamming: hamming_chars(&reference, &candidate),
        damerau_levenshtein: damerau_levenshtein_within(&reference, &candidate, options.dp_budget),
        reference_chars: reference.len(),
        candidate_chars: candidate.len(),
    }
}

pub fn compare(
    original: &SourceSample,
    duplicate: &DuplicateProgram,
    mode: ComparisonMode,
    options: &CompareOptions,
) -> SimilarityScores {
    score_pair(&comparison_pair(original, duplicate, mode, options), options)
}
