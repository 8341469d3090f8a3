//! Stage orchestration over an output directory.
//!
//! Each stage reads the previous stage's artifacts from `out_dir` and writes
//! its own, so any stage can be rerun from a cold start:
//!
//! | stage    | reads                                  | writes                                  |
//! |----------|----------------------------------------|-----------------------------------------|
//! | scan     | corpus root                            | `corpus.jsonl`, `corpus.csv`            |
//! | prefixes | `corpus.jsonl`                         | `prefixes.jsonl`                        |
//! | complete | `prefixes.jsonl`                       | `completions.jsonl`, `complete_meta.json` |
//! | analyze  | corpus, prefixes, completions          | `originals.jsonl`, `scores.jsonl`       |
//! | report   | analyze output, corpus, complete meta  | report artifacts                        |

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::info;

use crate::client::{ClientError, CompletionClient, CompletionOutcome, EndpointConfig, UNKNOWN_MODEL};
use crate::codemetrics::{analyze_original, analyze_source, analyze_with_fallback, length_ratio, Provenance, StaticMetrics};
use crate::corpus::{scan_corpus, write_manifest, CorpusConfig, CorpusError, SourceSample};
use crate::prefixer::{generate_prefix_cases, merge_completion, PrefixCase, PrefixOutcome, MIN_PREFIXABLE_CHARS};
use crate::ratio::Ratio;
use crate::report::{aggregate, emit, OutputFormat, ReportBundle, ReportError, RowFlag, RunCounts, RunMetadata, ScoreRow};
use crate::simetrics::{compare, CompareOptions, ComparisonMode, DEFAULT_DP_BUDGET};

pub const CORPUS_JSONL: &str = "corpus.jsonl";
pub const CORPUS_CSV: &str = "corpus.csv";
pub const PREFIXES_JSONL: &str = "prefixes.jsonl";
pub const COMPLETIONS_JSONL: &str = "completions.jsonl";
pub const COMPLETE_META_JSON: &str = "complete_meta.json";
pub const ORIGINALS_JSONL: &str = "originals.jsonl";
pub const SCORES_JSONL: &str = "scores.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("failed to read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("failed to parse config {path}: {source}")]
    ConfigParse { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("missing artifact {path}; run the {stage} stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("{path}:{line}: malformed record: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no sample is long enough to produce prefixes (minimum {MIN_PREFIXABLE_CHARS} characters)")]
    NoPrefixes,
    #[error("all requests failed ({failed} requests); first failure: {first}")]
    AllRequestsFailed { failed: usize, first: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: CorpusConfig,
    pub endpoint: EndpointConfig,
    pub ratios: Vec<Ratio>,
    pub modes: Vec<ComparisonMode>,
    pub fragment_truncation: bool,
    pub dp_budget: u64,
    pub buckets: usize,
    pub out_dir: PathBuf,
    /// Drives the sample subset when `sample_limit` is set.
    pub seed: u64,
    pub sample_limit: Option<usize>,
    pub formats: Vec<OutputFormat>,
    /// Written into the summary; left empty for reproducible output.
    #[serde(skip)]
    pub timestamp: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusConfig::default(),
            endpoint: EndpointConfig::default(),
            ratios: Ratio::all(),
            modes: ComparisonMode::ALL.to_vec(),
            fragment_truncation: true,
            dp_budget: DEFAULT_DP_BUDGET,
            buckets: crate::report::DEFAULT_BUCKETS,
            out_dir: PathBuf::from("out"),
            seed: 0,
            sample_limit: None,
            formats: OutputFormat::ALL.to_vec(),
            timestamp: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|source| PipelineError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.corpus.validate()?;
        self.endpoint.validate()?;
        if self.ratios.is_empty() {
            return Err(PipelineError::Config("at least one ratio is required".into()));
        }
        if self.modes.is_empty() {
            return Err(PipelineError::Config("at least one comparison mode is required".into()));
        }
        if self.buckets < 2 {
            return Err(PipelineError::Config(format!("buckets must be at least 2, got {}", self.buckets)));
        }
        if self.sample_limit == Some(0) {
            return Err(PipelineError::Config("sample_limit must be positive".into()));
        }
        Ok(())
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            fragment_truncation: self.fragment_truncation,
            dp_budget: self.dp_budget,
        }
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn sorted_ratios(&self) -> Vec<Ratio> {
        let set: BTreeSet<Ratio> = self.ratios.iter().copied().collect();
        set.into_iter().collect()
    }

    fn sorted_modes(&self) -> Vec<ComparisonMode> {
        let set: BTreeSet<ComparisonMode> = self.modes.iter().copied().collect();
        set.into_iter().collect()
    }
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, &record).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<Vec<T>, PipelineError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(PipelineError::MissingArtifact {
                path: path.to_path_buf(),
                stage,
            })
        }
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|source| PipelineError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(records)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PipelineError::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        },
        _ => io_err(path)(e),
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Record {
        path: path.to_path_buf(),
        line: 1,
        source,
    })
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), PipelineError> {
    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSummary {
    pub samples: usize,
    pub skipped_non_utf8: usize,
    pub skipped_by_size: usize,
}

/// Seeded subset of `limit` samples, returned in id order.
pub fn subsample(mut samples: Vec<SourceSample>, limit: Option<usize>, seed: u64) -> Vec<SourceSample> {
    if let Some(limit) = limit {
        if limit < samples.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            samples.shuffle(&mut rng);
            samples.truncate(limit);
            samples.sort_by(|a, b| a.id.cmp(&b.id));
        }
    }
    samples
}

pub fn stage_scan(config: &RunConfig) -> Result<ScanSummary, PipelineError> {
    ensure_out_dir(config)?;
    let scan = scan_corpus(&config.corpus)?;
    let samples = subsample(scan.samples, config.sample_limit, config.seed);
    let manifest_path = config.artifact(CORPUS_CSV);
    let file = File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    write_manifest(&samples, BufWriter::new(file)).map_err(|e| PipelineError::Io {
        path: manifest_path.clone(),
        source: e.into(),
    })?;
    write_jsonl(&config.artifact(CORPUS_JSONL), &samples)?;
    info!(samples = samples.len(), "corpus scanned");
    Ok(ScanSummary {
        samples: samples.len(),
        skipped_non_utf8: scan.skipped_non_utf8.len(),
        skipped_by_size: scan.skipped_by_size,
    })
}

fn load_corpus(config: &RunConfig) -> Result<Vec<SourceSample>, PipelineError> {
    read_jsonl(&config.artifact(CORPUS_JSONL), "scan")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSummary {
    pub cases: usize,
    pub too_short: Vec<String>,
}

pub fn stage_prefixes(config: &RunConfig) -> Result<PrefixSummary, PipelineError> {
    let samples = load_corpus(config)?;
    let ratios = config.sorted_ratios();
    let mut cases = Vec::new();
    let mut too_short = Vec::new();
    for sample in &samples {
        match generate_prefix_cases(sample, &ratios) {
            PrefixOutcome::Cases(c) => cases.extend(c),
            PrefixOutcome::TooShort { sample_id, .. } => too_short.push(sample_id),
        }
    }
    if cases.is_empty() {
        return Err(PipelineError::NoPrefixes);
    }
    write_jsonl(&config.artifact(PREFIXES_JSONL), &cases)?;
    info!(cases = cases.len(), too_short = too_short.len(), "prefix cases written");
    Ok(PrefixSummary {
        cases: cases.len(),
        too_short,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteMeta {
    pub endpoint: String,
    /// Distinct model ids reported by the server, comma-separated.
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteSummary {
    pub requested: usize,
    pub completed: usize,
    pub failed: usize,
    pub from_cache: usize,
}

pub fn stage_complete(config: &RunConfig) -> Result<CompleteSummary, PipelineError> {
    let cases: Vec<PrefixCase> = read_jsonl(&config.artifact(PREFIXES_JSONL), "prefixes")?;
    let client = CompletionClient::new(config.endpoint.clone())?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err(&config.out_dir))?;
    let outcomes = runtime.block_on(client.run_batch(&cases));

    let models: BTreeSet<&str> = outcomes
        .iter()
        .filter_map(CompletionOutcome::record)
        .map(|r| r.model_id.as_str())
        .collect();
    let meta = CompleteMeta {
        endpoint: config.endpoint.base_url.clone(),
        model: if models.is_empty() {
            UNKNOWN_MODEL.to_string()
        } else {
            models.into_iter().collect::<Vec<_>>().join(",")
        },
    };
    write_jsonl(&config.artifact(COMPLETIONS_JSONL), &outcomes)?;
    write_json(&config.artifact(COMPLETE_META_JSON), &meta)?;

    let failed = outcomes.iter().filter(|o| o.is_failed()).count();
    let summary = CompleteSummary {
        requested: outcomes.len(),
        completed: outcomes.len() - failed,
        failed,
        from_cache: outcomes
            .iter()
            .filter_map(CompletionOutcome::record)
            .filter(|r| r.from_cache)
            .count(),
    };
    info!(?summary, "completions collected");
    if failed > 0 && failed == outcomes.len() {
        let first = match &outcomes[0] {
            CompletionOutcome::Failed(f) => f.reason.to_string(),
            CompletionOutcome::Completed(_) => unreachable!("all outcomes failed"),
        };
        return Err(PipelineError::AllRequestsFailed { failed, first });
    }
    Ok(summary)
}

/// Reference metrics of one original, or why they could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalRecord {
    pub sample_id: String,
    pub metrics: Option<StaticMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeSummary {
    pub rows: usize,
    pub unanalyzable_originals: usize,
}

fn score_row(
    sample: &SourceSample,
    original: Option<&StaticMetrics>,
    outcome: &CompletionOutcome,
    cases: &HashMap<(&str, Ratio), &PrefixCase>,
    modes: &[ComparisonMode],
    options: &CompareOptions,
) -> ScoreRow {
    let (sample_id, ratio) = outcome.key();
    let mut row = ScoreRow {
        sample_id: sample_id.to_string(),
        category: sample.category.clone(),
        ratio,
        whole_file: None,
        fragment: None,
        statics: None,
        generated_chars: 0,
        flags: BTreeSet::new(),
        failure: None,
    };
    let (record, case) = match (outcome, cases.get(&(sample_id, ratio))) {
        (CompletionOutcome::Completed(record), Some(case)) => (record, *case),
        (CompletionOutcome::Failed(failed), _) => {
            row.flags.insert(RowFlag::FailedRequest);
            row.failure = Some(failed.reason.to_string());
            return row;
        }
        (CompletionOutcome::Completed(_), None) => {
            row.flags.insert(RowFlag::FailedRequest);
            row.failure = Some("completion has no matching prefix case".into());
            return row;
        }
    };

    let duplicate = merge_completion(case, &record.text);
    row.generated_chars = record.text.chars().count();
    if record.text.is_empty() {
        row.flags.insert(RowFlag::EmptyGeneration);
    }
    for &mode in modes {
        let scores = compare(sample, &duplicate, mode, options);
        if scores.is_oversize() {
            row.flags.insert(RowFlag::OversizePair);
        }
        match mode {
            ComparisonMode::WholeFile => row.whole_file = Some(scores),
            ComparisonMode::Fragment => row.fragment = Some(scores),
        }
    }
    row.statics = match original {
        Some(reference) => Some(analyze_with_fallback(&duplicate, sample, reference)),
        None => analyze_source(&duplicate.content)
            .ok()
            .map(|analysis| analysis.into_metrics(length_ratio(&duplicate, sample))),
    };
    if row.statics.as_ref().is_some_and(|m| m.provenance == Provenance::InheritedFromOriginal) {
        row.flags.insert(RowFlag::InheritedMetrics);
    }
    row
}

pub fn stage_analyze(config: &RunConfig) -> Result<AnalyzeSummary, PipelineError> {
    let samples = load_corpus(config)?;
    let cases: Vec<PrefixCase> = read_jsonl(&config.artifact(PREFIXES_JSONL), "prefixes")?;
    let outcomes: Vec<CompletionOutcome> = read_jsonl(&config.artifact(COMPLETIONS_JSONL), "complete")?;

    let wanted: BTreeSet<&str> = cases.iter().map(|c| c.sample_id.as_str()).collect();
    let originals: Vec<OriginalRecord> = samples
        .iter()
        .filter(|s| wanted.contains(s.id.as_str()))
        .map(|s| match analyze_original(s) {
            Ok(metrics) => OriginalRecord {
                sample_id: s.id.clone(),
                metrics: Some(metrics),
                error: None,
            },
            Err(e) => OriginalRecord {
                sample_id: s.id.clone(),
                metrics: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let unanalyzable = originals.iter().filter(|o| o.metrics.is_none()).count();
    write_jsonl(&config.artifact(ORIGINALS_JSONL), &originals)?;

    let by_id: HashMap<&str, &SourceSample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let reference: HashMap<&str, &StaticMetrics> = originals
        .iter()
        .filter_map(|o| o.metrics.as_ref().map(|m| (o.sample_id.as_str(), m)))
        .collect();
    let case_index: HashMap<(&str, Ratio), &PrefixCase> =
        cases.iter().map(|c| ((c.sample_id.as_str(), c.ratio), c)).collect();
    let modes = config.sorted_modes();
    let options = config.compare_options();

    let mut rows: Vec<ScoreRow> = Vec::with_capacity(outcomes.len());
    for outcome in &outcomes {
        let (sample_id, _) = outcome.key();
        let Some(sample) = by_id.get(sample_id) else {
            return Err(PipelineError::Config(format!(
                "completion for {sample_id} has no sample in {CORPUS_JSONL}"
            )));
        };
        rows.push(score_row(
            sample,
            reference.get(sample_id).copied(),
            outcome,
            &case_index,
            &modes,
            &options,
        ));
    }
    rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id).then(a.ratio.cmp(&b.ratio)));
    write_jsonl(&config.artifact(SCORES_JSONL), &rows)?;
    info!(rows = rows.len(), unanalyzable, "duplicates analyzed");
    Ok(AnalyzeSummary {
        rows: rows.len(),
        unanalyzable_originals: unanalyzable,
    })
}

fn file_digest(path: &Path, stage: &'static str) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PipelineError::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        },
        _ => io_err(path)(e),
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn stage_report(config: &RunConfig) -> Result<(ReportBundle, Vec<PathBuf>), PipelineError> {
    let rows: Vec<ScoreRow> = read_jsonl(&config.artifact(SCORES_JSONL), "analyze")?;
    let originals: Vec<OriginalRecord> = read_jsonl(&config.artifact(ORIGINALS_JSONL), "analyze")?;
    let samples = load_corpus(config)?;
    let meta: CompleteMeta = read_json(&config.artifact(COMPLETE_META_JSON), "complete")?;

    let unanalyzable_originals = originals.iter().filter(|o| o.metrics.is_none()).count();
    let reference: Vec<StaticMetrics> = originals.into_iter().filter_map(|o| o.metrics).collect();
    let counts = RunCounts {
        samples: samples.len(),
        too_short: samples.iter().filter(|s| s.char_count < MIN_PREFIXABLE_CHARS).count(),
        unanalyzable_originals,
        ..RunCounts::default()
    };
    let metadata = RunMetadata {
        endpoint: meta.endpoint,
        model: meta.model,
        corpus_digest: file_digest(&config.artifact(CORPUS_CSV), "scan")?,
        timestamp: config.timestamp.clone(),
    };
    let bundle = aggregate(&rows, &reference, config.buckets, metadata, counts)?;
    let written = emit(&bundle, &rows, &config.out_dir, &config.formats)?;
    Ok((bundle, written))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scan: ScanSummary,
    pub prefixes: PrefixSummary,
    pub complete: CompleteSummary,
    pub analyze: AnalyzeSummary,
    pub bundle: ReportBundle,
    pub written: Vec<PathBuf>,
}

/// All five stages in order.
pub fn run(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let scan = stage_scan(config)?;
    let prefixes = stage_prefixes(config)?;
    let complete = stage_complete(config)?;
    let analyze = stage_analyze(config)?;
    let (bundle, written) = stage_report(config)?;
    Ok(RunSummary {
        scan,
        prefixes,
        complete,
        analyze,
        bundle,
        written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mockserver::{MockServer, MockStrategy};

    const FILES: [(&str, &str); 3] = [
        ("maths/fib.py", "def fib(n):\n    if n < 2:\n        return n\n    return fib(n - 1) + fib(n - 2)\n"),
        ("sorts/bubble.py", "def bubble(xs):\n    for i in range(len(xs)):\n        for j in range(len(xs) - i - 1):\n            if xs[j] > xs[j + 1]:\n                xs[j], xs[j + 1] = xs[j + 1], xs[j]\n    return xs\n"),
        ("tiny.py", "x = 1\n"),
    ];

    fn fixture() -> (tempfile::TempDir, RunConfig) {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus");
        for (rel, content) in FILES {
            let path = corpus.join(rel);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, content).unwrap();
        }
        let config = RunConfig {
            corpus: CorpusConfig::new(&corpus),
            out_dir: dir.path().join("out"),
            ..RunConfig::default()
        };
        (dir, config)
    }

    fn samples() -> Vec<SourceSample> {
        FILES
            .iter()
            .map(|(id, c)| SourceSample::new(*id, "x", *c).unwrap())
            .collect()
    }

    #[test]
    fn config_from_toml_with_defaults() {
        let text = r#"
            ratios = [0.5, 0.1]
            buckets = 4
            [corpus]
            root = "examples"
            [endpoint]
            base_url = "http://localhost:9"
            max_parallel = 2
        "#;
        let config = RunConfig::from_toml_str(text, Path::new("c.toml")).unwrap();
        assert_eq!(config.sorted_ratios(), [Ratio::from_tenths(1).unwrap(), Ratio::from_tenths(5).unwrap()]);
        assert_eq!(config.buckets, 4);
        assert_eq!(config.endpoint.max_parallel, 2);
        assert_eq!(config.endpoint.timeout_ms, 30_000);
        assert_eq!(config.modes.len(), 2);
        assert!(config.validate().is_ok());

        assert!(RunConfig::from_toml_str("ratios = [1.5]", Path::new("c.toml")).is_err());
        let bad = RunConfig {
            buckets: 1,
            ..config
        };
        assert!(matches!(bad.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn subsample_is_seeded_and_sorted() {
        let all: Vec<SourceSample> = (0..20)
            .map(|i| SourceSample::new(format!("f{i:02}.py"), "c", "x = 1\n").unwrap())
            .collect();
        let a = subsample(all.clone(), Some(5), 7);
        let b = subsample(all.clone(), Some(5), 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[0].id < w[1].id));
        assert_eq!(subsample(all.clone(), None, 7).len(), 20);
    }

    #[test]
    fn stages_need_their_inputs() {
        let (_dir, config) = fixture();
        assert!(matches!(
            stage_prefixes(&config),
            Err(PipelineError::MissingArtifact { stage: "scan", .. })
        ));
        stage_scan(&config).unwrap();
        assert!(matches!(
            stage_complete(&config),
            Err(PipelineError::MissingArtifact { stage: "prefixes", .. })
        ));
    }

    #[test]
    fn echo_run_end_to_end() {
        let (_dir, mut config) = fixture();
        let server = MockServer::new(samples(), MockStrategy::echo());
        let handle = server.spawn("127.0.0.1:0".parse().unwrap()).unwrap();
        config.endpoint = EndpointConfig::new(handle.base_url());

        let summary = run(&config).unwrap();
        assert_eq!(summary.scan.samples, 3);
        assert_eq!(summary.prefixes.too_short, ["tiny.py"]);
        assert_eq!(summary.analyze.rows, 18);
        assert_eq!(summary.bundle.counts.too_short, 1);
        assert_eq!(summary.bundle.run_metadata.model, "mock/echo_remainder");
        for m in &summary.bundle.per_ratio_means {
            assert_eq!(m.ro_whole, Some(1.0));
            assert_eq!(m.statics.as_ref().unwrap().length_ratio, 1.0);
        }
        let rows = fs::read_to_string(config.out_dir.join("rows.csv")).unwrap();
        assert_eq!(rows.lines().count(), 19);
    }

    #[test]
    fn unreachable_endpoint_fails_the_run() {
        let (_dir, mut config) = fixture();
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        config.endpoint = EndpointConfig {
            max_retries: 0,
            timeout_ms: 2_000,
            ..EndpointConfig::new(format!("http://{addr}"))
        };
        let err = run(&config).unwrap_err();
        assert!(matches!(err, PipelineError::AllRequestsFailed { failed: 18, .. }));
        assert!(err.to_string().contains("all requests failed"));
    }
}
