//! Per-ratio aggregates, heatmap grids and the run's output artifacts.
//!
//! Artifacts written by [`emit`]:
//!
//! - `rows.csv`: one [`ScoreRow`] per line, ordered by (sample id, ratio)
//! - `summary.json`: run metadata, counts, per-ratio and reference means
//! - `heatmap_<algorithm>_<mode>.csv`: bucket × ratio count grids
//! - optional SVG renderings of the mean plots and the heatmaps
//!
//! Floats are written with six decimal digits, so identical inputs give
//! byte-identical files.

mod svg;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::codemetrics::{Provenance, StaticMetrics};
use crate::ratio::Ratio;
use crate::simetrics::{ComparisonMode, SimilarityScores};

pub const DEFAULT_BUCKETS: usize = 10;
pub const RATIO_COLUMNS: usize = 9;

pub const ROWS_CSV_HEADER: [&str; 18] = [
    "sample_id",
    "category",
    "ratio",
    "ro_whole",
    "jw_whole",
    "hamming_whole",
    "dl_whole",
    "ro_frag",
    "jw_frag",
    "hamming_frag",
    "dl_frag",
    "cc_avg",
    "halstead_bugs",
    "halstead_effort",
    "length_ratio",
    "generated_chars",
    "provenance",
    "flags",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no rows to aggregate")]
    NoRows,
    #[error("every request failed; nothing to aggregate")]
    AllRowsFailed,
    #[error("heatmaps need at least 2 buckets, got {0}")]
    Buckets(usize),
    #[error("failed to write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("failed to write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    FailedRequest,
    EmptyGeneration,
    InheritedMetrics,
    OversizePair,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::FailedRequest => "failed_request",
            RowFlag::EmptyGeneration => "empty_generation",
            RowFlag::InheritedMetrics => "inherited_metrics",
            RowFlag::OversizePair => "oversize_pair",
        }
    }
}

/// Every score for one (sample, ratio) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: String,
    pub category: String,
    pub ratio: Ratio,
    pub whole_file: Option<SimilarityScores>,
    pub fragment: Option<SimilarityScores>,
    pub statics: Option<StaticMetrics>,
    pub generated_chars: usize,
    pub flags: BTreeSet<RowFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ScoreRow {
    pub fn is_failed(&self) -> bool {
        self.flags.contains(&RowFlag::FailedRequest)
    }

    pub fn scores(&self, mode: ComparisonMode) -> Option<&SimilarityScores> {
        match mode {
            ComparisonMode::WholeFile => self.whole_file.as_ref(),
            ComparisonMode::Fragment => self.fragment.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RatcliffObershelp,
    JaroWinkler,
    Hamming,
    DamerauLevenshtein,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::RatcliffObershelp,
        Algorithm::JaroWinkler,
        Algorithm::Hamming,
        Algorithm::DamerauLevenshtein,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::RatcliffObershelp => "ratcliff_obershelp",
            Algorithm::JaroWinkler => "jaro_winkler",
            Algorithm::Hamming => "hamming",
            Algorithm::DamerauLevenshtein => "damerau_levenshtein",
        }
    }

    pub fn is_distance(self) -> bool {
        matches!(self, Algorithm::Hamming | Algorithm::DamerauLevenshtein)
    }

    /// Score in [0, 1]; distances are normalized by the longer input.
    pub fn unit_value(self, scores: &SimilarityScores) -> Option<f64> {
        let normalize = |d| normalize_distance(d, scores.reference_chars, scores.candidate_chars);
        match self {
            Algorithm::RatcliffObershelp => Some(scores.ratcliff_obershelp),
            Algorithm::JaroWinkler => Some(scores.jaro_winkler),
            Algorithm::Hamming => Some(normalize(scores.hamming)),
            Algorithm::DamerauLevenshtein => scores.damerau_levenshtein.map(normalize),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn normalize_distance(distance: usize, ref_len: usize, cand_len: usize) -> f64 {
    let longest = ref_len.max(cand_len);
    if longest == 0 {
        0.0
    } else {
        distance as f64 / longest as f64
    }
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn ser6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*x))
}

fn ser6_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round6(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticMeans {
    pub samples: usize,
    #[serde(serialize_with = "ser6")]
    pub cyclomatic_avg: f64,
    #[serde(serialize_with = "ser6")]
    pub halstead_bugs: f64,
    #[serde(serialize_with = "ser6")]
    pub halstead_effort: f64,
    #[serde(serialize_with = "ser6")]
    pub length_ratio: f64,
}

impl StaticMeans {
    fn of<'a>(metrics: impl Iterator<Item = &'a StaticMetrics>) -> Option<Self> {
        let (mut n, mut cc, mut bugs, mut effort, mut length) = (0usize, 0.0, 0.0, 0.0, 0.0);
        for m in metrics {
            n += 1;
            cc += m.cyclomatic_avg;
            bugs += m.halstead.bugs;
            effort += m.halstead.effort;
            length += m.length_ratio;
        }
        (n > 0).then(|| {
            let n_f = n as f64;
            StaticMeans {
                samples: n,
                cyclomatic_avg: cc / n_f,
                halstead_bugs: bugs / n_f,
                halstead_effort: effort / n_f,
                length_ratio: length / n_f,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMeans {
    pub ratio: Ratio,
    /// Rows at this ratio that were not failed requests.
    pub rows: usize,
    #[serde(flatten)]
    pub statics: Option<StaticMeans>,
    #[serde(serialize_with = "ser6_opt")]
    pub ro_whole: Option<f64>,
    #[serde(serialize_with = "ser6_opt")]
    pub jw_whole: Option<f64>,
    #[serde(serialize_with = "ser6_opt")]
    pub ro_fragment: Option<f64>,
    #[serde(serialize_with = "ser6_opt")]
    pub jw_fragment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub algorithm: Algorithm,
    pub mode: ComparisonMode,
    pub buckets: usize,
    /// `counts[ratio_index][bucket]`, nine ratio columns.
    pub counts: Vec<Vec<u64>>,
}

impl HeatmapGrid {
    pub fn column_total(&self, ratio: Ratio) -> u64 {
        self.counts[ratio.index()].iter().sum()
    }

    pub fn file_stem(&self) -> String {
        format!("heatmap_{}_{}", self.algorithm, self.mode)
    }
}

pub fn bucket_index(value: f64, buckets: usize) -> usize {
    let scaled = (value.clamp(0.0, 1.0) * buckets as f64).floor() as usize;
    scaled.min(buckets - 1)
}

/// Counts of rows per (ratio, value bucket). Failed rows, rows without the
/// requested mode, and oversize pairs for Damerau-Levenshtein are excluded.
pub fn heatmap_grid(
    rows: &[ScoreRow],
    algorithm: Algorithm,
    mode: ComparisonMode,
    buckets: usize,
) -> Result<HeatmapGrid, ReportError> {
    if buckets < 2 {
        return Err(ReportError::Buckets(buckets));
    }
    let mut counts = vec![vec![0u64; buckets]; RATIO_COLUMNS];
    for row in rows.iter().filter(|r| !r.is_failed()) {
        if let Some(value) = row.scores(mode).and_then(|s| algorithm.unit_value(s)) {
            counts[row.ratio.index()][bucket_index(value, buckets)] += 1;
        }
    }
    Ok(HeatmapGrid {
        algorithm,
        mode,
        buckets,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub endpoint: String,
    pub model: String,
    /// SHA-256 of the corpus manifest CSV.
    pub corpus_digest: String,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub samples: usize,
    pub too_short: usize,
    pub unanalyzable_originals: usize,
    pub rows: usize,
    pub failed_requests: usize,
    pub empty_generation: usize,
    pub inherited_metrics: usize,
    pub oversize_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub run_metadata: RunMetadata,
    pub counts: RunCounts,
    pub per_ratio_means: Vec<RatioMeans>,
    pub reference_means: Option<StaticMeans>,
    pub heatmaps: Vec<HeatmapGrid>,
}

#[derive(Serialize)]
struct SummaryView<'a> {
    run_metadata: &'a RunMetadata,
    counts: &'a RunCounts,
    per_ratio_means: &'a [RatioMeans],
    reference_means: &'a Option<StaticMeans>,
}

impl ReportBundle {
    pub fn summary_json(&self) -> String {
        let view = SummaryView {
            run_metadata: &self.run_metadata,
            counts: &self.counts,
            per_ratio_means: &self.per_ratio_means,
            reference_means: &self.reference_means,
        };
        let mut json = serde_json::to_string_pretty(&view).expect("summary serialization cannot fail");
        json.push('\n');
        json
    }

    pub fn means_at(&self, ratio: Ratio) -> Option<&RatioMeans> {
        self.per_ratio_means.iter().find(|m| m.ratio == ratio)
    }

    pub fn heatmap(&self, algorithm: Algorithm, mode: ComparisonMode) -> Option<&HeatmapGrid> {
        self.heatmaps.iter().find(|h| h.algorithm == algorithm && h.mode == mode)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

/// Per-ratio means over rows that are not failed requests (inherited-metric
/// rows included), reference means over the originals, and one heatmap per
/// algorithm and mode present in the rows.
pub fn aggregate(
    rows: &[ScoreRow],
    reference: &[StaticMetrics],
    buckets: usize,
    run_metadata: RunMetadata,
    mut counts: RunCounts,
) -> Result<ReportBundle, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::NoRows);
    }
    if rows.iter().all(ScoreRow::is_failed) {
        return Err(ReportError::AllRowsFailed);
    }

    let mut per_ratio_means = Vec::new();
    for ratio in Ratio::all() {
        let usable: Vec<&ScoreRow> = rows.iter().filter(|r| r.ratio == ratio && !r.is_failed()).collect();
        if usable.is_empty() {
            continue;
        }
        let sim_mean = |mode: ComparisonMode, pick: fn(&SimilarityScores) -> f64| {
            mean(usable.iter().filter_map(|r| r.scores(mode)).map(pick))
        };
        per_ratio_means.push(RatioMeans {
            ratio,
            rows: usable.len(),
            statics: StaticMeans::of(usable.iter().filter_map(|r| r.statics.as_ref())),
            ro_whole: sim_mean(ComparisonMode::WholeFile, |s| s.ratcliff_obershelp),
            jw_whole: sim_mean(ComparisonMode::WholeFile, |s| s.jaro_winkler),
            ro_fragment: sim_mean(ComparisonMode::Fragment, |s| s.ratcliff_obershelp),
            jw_fragment: sim_mean(ComparisonMode::Fragment, |s| s.jaro_winkler),
        });
    }

    let modes: BTreeSet<ComparisonMode> = rows
        .iter()
        .flat_map(|r| r.whole_file.iter().chain(r.fragment.iter()).map(|s| s.mode))
        .collect();
    let mut heatmaps = Vec::new();
    for algorithm in Algorithm::ALL {
        for &mode in &modes {
            heatmaps.push(heatmap_grid(rows, algorithm, mode, buckets)?);
        }
    }

    counts.rows = rows.len();
    let flagged = |flag| rows.iter().filter(|r| r.flags.contains(&flag)).count();
    counts.failed_requests = flagged(RowFlag::FailedRequest);
    counts.empty_generation = flagged(RowFlag::EmptyGeneration);
    counts.inherited_metrics = flagged(RowFlag::InheritedMetrics);
    counts.oversize_pairs = flagged(RowFlag::OversizePair);

    Ok(ReportBundle {
        run_metadata,
        counts,
        per_ratio_means,
        reference_means: StaticMeans::of(reference.iter()),
        heatmaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg];
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(format!("unknown output format {other:?}")),
        }
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn opt<T>(value: Option<T>, render: impl Fn(T) -> String) -> String {
    value.map(render).unwrap_or_default()
}

fn row_record(row: &ScoreRow) -> Vec<String> {
    let mut record = vec![row.sample_id.clone(), row.category.clone(), row.ratio.to_string()];
    for scores in [&row.whole_file, &row.fragment] {
        let s = scores.as_ref();
        record.push(opt(s, |s| fixed(s.ratcliff_obershelp)));
        record.push(opt(s, |s| fixed(s.jaro_winkler)));
        record.push(opt(s, |s| s.hamming.to_string()));
        record.push(opt(s.and_then(|s| s.damerau_levenshtein), |d| d.to_string()));
    }
    let m = row.statics.as_ref();
    record.push(opt(m, |m| fixed(m.cyclomatic_avg)));
    record.push(opt(m, |m| fixed(m.halstead.bugs)));
    record.push(opt(m, |m| fixed(m.halstead.effort)));
    record.push(opt(m, |m| fixed(m.length_ratio)));
    record.push(row.generated_chars.to_string());
    record.push(opt(m, |m| m.provenance.as_str().to_string()));
    record.push(row.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";"));
    record
}

/// `rows.csv` contents, sorted by (sample id, ratio).
pub fn rows_csv(rows: &[ScoreRow]) -> Result<Vec<u8>, csv::Error> {
    let mut sorted: Vec<&ScoreRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id).then(a.ratio.cmp(&b.ratio)));
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(ROWS_CSV_HEADER)?;
    for row in sorted {
        writer.write_record(row_record(row))?;
    }
    writer.into_inner().map_err(|e| e.into_error().into())
}

/// One line per bucket (lowest first), one count column per ratio.
pub fn heatmap_csv(grid: &HeatmapGrid) -> Result<Vec<u8>, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["bucket".to_string(), "lower".to_string(), "upper".to_string()];
    header.extend(Ratio::all().iter().map(Ratio::to_string));
    writer.write_record(&header)?;
    for bucket in 0..grid.buckets {
        let width = 1.0 / grid.buckets as f64;
        let mut record = vec![
            bucket.to_string(),
            fixed(bucket as f64 * width),
            fixed((bucket + 1) as f64 * width),
        ];
        record.extend(grid.counts.iter().map(|column| column[bucket].to_string()));
        writer.write_record(&record)?;
    }
    writer.into_inner().map_err(|e| e.into_error().into())
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, ReportError> {
    fs::write(&path, bytes).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the selected artifact formats into `out_dir`; returns the paths
/// written.
pub fn emit(
    bundle: &ReportBundle,
    rows: &[ScoreRow],
    out_dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Csv { path, source }
    };
    let formats: BTreeSet<OutputFormat> = formats.iter().copied().collect();
    let mut written = Vec::new();

    if formats.contains(&OutputFormat::Csv) {
        let path = out_dir.join("rows.csv");
        let bytes = rows_csv(rows).map_err(csv_err(&path))?;
        written.push(write_file(path, &bytes)?);
        for grid in &bundle.heatmaps {
            let path = out_dir.join(format!("{}.csv", grid.file_stem()));
            let bytes = heatmap_csv(grid).map_err(csv_err(&path))?;
            written.push(write_file(path, &bytes)?);
        }
    }
    if formats.contains(&OutputFormat::Json) {
        written.push(write_file(out_dir.join("summary.json"), bundle.summary_json().as_bytes())?);
    }
    if formats.contains(&OutputFormat::Svg) {
        for (name, svg) in svg::mean_plots(bundle) {
            written.push(write_file(out_dir.join(format!("{name}.svg")), svg.as_bytes())?);
        }
        for grid in &bundle.heatmaps {
            let path = out_dir.join(format!("{}.svg", grid.file_stem()));
            written.push(write_file(path, svg::heatmap(grid).as_bytes())?);
        }
    }
    Ok(written)
}

pub fn is_inherited(metrics: &StaticMetrics) -> bool {
    metrics.provenance == Provenance::InheritedFromOriginal
}
