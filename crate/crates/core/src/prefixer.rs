//! Ratio-based prefix prompts and the prefix + completion merge.

use serde::{Deserialize, Serialize};

use crate::corpus::SourceSample;
use crate::ratio::Ratio;

/// Samples shorter than this cannot yield nine proper, non-empty prefixes.
pub const MIN_PREFIXABLE_CHARS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixCase {
    pub sample_id: String,
    pub ratio: Ratio,
    /// Character index where the prompt ends.
    pub boundary: usize,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateProgram {
    pub sample_id: String,
    pub ratio: Ratio,
    pub content: String,
    pub generated: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefixOutcome {
    Cases(Vec<PrefixCase>),
    TooShort { sample_id: String, char_count: usize },
}

impl PrefixOutcome {
    pub fn cases(self) -> Vec<PrefixCase> {
        match self {
            PrefixOutcome::Cases(cases) => cases,
            PrefixOutcome::TooShort { .. } => Vec::new(),
        }
    }
}

/// Byte offset of the `chars`-th character of `s` (or `s.len()` past the end).
pub(crate) fn byte_offset(s: &str, chars: usize) -> usize {
    s.char_indices().nth(chars).map_or(s.len(), |(i, _)| i)
}

pub fn generate_prefix_cases(sample: &SourceSample, ratios: &[Ratio]) -> PrefixOutcome {
    if sample.char_count < MIN_PREFIXABLE_CHARS {
        return PrefixOutcome::TooShort {
            sample_id: sample.id.clone(),
            char_count: sample.char_count,
        };
    }
    let mut ratios = ratios.to_vec();
    ratios.sort();
    ratios.dedup();
    let cases = ratios
        .into_iter()
        .map(|ratio| {
            let boundary = ratio.boundary(sample.char_count);
            PrefixCase {
                sample_id: sample.id.clone(),
                ratio,
                boundary,
                prefix: sample.content[..byte_offset(&sample.content, boundary)].to_string(),
            }
        })
        .collect();
    PrefixOutcome::Cases(cases)
}

pub fn merge_completion(case: &PrefixCase, completion_text: &str) -> DuplicateProgram {
    let mut content = String::with_capacity(case.prefix.len() + completion_text.len());
    content.push_str(&case.prefix);
    content.push_str(completion_text);
    DuplicateProgram {
        sample_id: case.sample_id.clone(),
        ratio: case.ratio,
        content,
        generated: completion_text.to_string(),
    }
}

/// The part of the original that follows the case's boundary.
pub fn original_remainder<'a>(sample: &'a SourceSample, case: &PrefixCase) -> &'a str {
    &sample.content[byte_offset(&sample.content, case.boundary)..]
}
