//! Static quality metrics: cyclomatic complexity, Halstead measures and the
//! duplicate-to-original length ratio.
//!
//! Completions are frequently cut off mid-construct. When a duplicate cannot
//! be analyzed, [`analyze_with_fallback`] assigns it the original file's
//! scores and records that in [`Provenance`].

pub mod cyclomatic;
pub mod halstead;
pub mod lexer;

pub use cyclomatic::{cyclomatic_complexity, BlockComplexity, CyclomaticError, MODULE_BLOCK};
pub use halstead::{halstead, tokenize_source, ClassifiedToken, HalsteadMetrics, HalsteadResult, TokenClass, TokenStream};

use serde::{Deserialize, Serialize};

use crate::corpus::SourceSample;
use crate::prefixer::DuplicateProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    InheritedFromOriginal,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Computed => "computed",
            Provenance::InheritedFromOriginal => "inherited_from_original",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("cyclomatic analysis failed: {0}")]
    Cyclomatic(#[from] CyclomaticError),
    #[error("token stream is dirty")]
    DirtyTokens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticMetrics {
    /// Mean complexity over blocks; 0 when there are no blocks.
    pub cyclomatic_avg: f64,
    pub cyclomatic_total: u32,
    pub cyclomatic_blocks: Vec<BlockComplexity>,
    pub halstead: HalsteadMetrics,
    pub length_ratio: f64,
    pub provenance: Provenance,
}

/// Cyclomatic blocks and Halstead measures of a clean program.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceAnalysis {
    pub blocks: Vec<BlockComplexity>,
    pub halstead: HalsteadMetrics,
}

impl SourceAnalysis {
    pub fn into_metrics(self, length_ratio: f64) -> StaticMetrics {
        let total: u32 = self.blocks.iter().map(|b| b.complexity).sum();
        let avg = if self.blocks.is_empty() {
            0.0
        } else {
            f64::from(total) / self.blocks.len() as f64
        };
        StaticMetrics {
            cyclomatic_avg: avg,
            cyclomatic_total: total,
            cyclomatic_blocks: self.blocks,
            halstead: self.halstead,
            length_ratio,
            provenance: Provenance::Computed,
        }
    }
}

pub fn analyze_source(code: &str) -> Result<SourceAnalysis, AnalysisError> {
    let h = halstead(code);
    if h.dirty {
        return Err(AnalysisError::DirtyTokens);
    }
    let blocks = cyclomatic_complexity(code)?;
    Ok(SourceAnalysis {
        blocks,
        halstead: h.metrics,
    })
}

/// Reference metrics of a ground-truth file (length ratio 1).
pub fn analyze_original(sample: &SourceSample) -> Result<StaticMetrics, AnalysisError> {
    Ok(analyze_source(&sample.content)?.into_metrics(1.0))
}

pub fn length_ratio(duplicate: &DuplicateProgram, original: &SourceSample) -> f64 {
    duplicate.content.chars().count() as f64 / original.char_count as f64
}

/// Metrics of a duplicate, or the original's metrics when the duplicate
/// cannot be analyzed. The length ratio always reflects the actual lengths.
pub fn analyze_with_fallback(
    duplicate: &DuplicateProgram,
    original: &SourceSample,
    original_metrics: &StaticMetrics,
) -> StaticMetrics {
    let ratio = length_ratio(duplicate, original);
    match analyze_source(&duplicate.content) {
        Ok(analysis) => analysis.into_metrics(ratio),
        Err(_) => StaticMetrics {
            length_ratio: ratio,
            provenance: Provenance::InheritedFromOriginal,
            ..original_metrics.clone()
        },
    }
}
