//! Benchmark harness for code-completion servers.
//!
//! The pipeline slices each ground-truth source file into nine prefix
//! prompts (10% through 90% of its characters), asks a completion server to
//! continue each prompt, merges prefix and completion into a duplicate
//! program, and scores the duplicate against the original with text
//! similarity algorithms and static code metrics.

pub mod client;
pub mod codemetrics;
pub mod corpus;
pub mod mockserver;
pub mod pipeline;
pub mod prefixer;
pub mod ratio;
pub mod report;
pub mod simetrics;

pub use corpus::{CorpusConfig, SourceSample};
pub use prefixer::{DuplicateProgram, PrefixCase};
pub use ratio::Ratio;
