use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use complbench::client::SecretToken;
use complbench::corpus::scan_corpus;
use complbench::mockserver::{serve_until_interrupted, MockServer, MockStrategy};
use complbench::pipeline::{self, RunConfig};
use complbench::ratio::parse_ratio_list;
use complbench::report::{OutputFormat, ReportBundle};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "complbench", version, about = "Benchmark a code-completion server against a corpus of source files")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for stage artifacts and reports.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Corpus root directory.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Completion server base URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Bearer token for the completion server.
    #[arg(long, global = true, env = "COMPLBENCH_TOKEN", hide_env_values = true)]
    token: Option<String>,
    #[arg(long, global = true)]
    max_parallel: Option<usize>,
    /// Comma-separated prefix ratios, e.g. 0.1,0.5,0.9.
    #[arg(long, global = true)]
    ratios: Option<String>,
    /// Heatmap bucket count.
    #[arg(long, global = true)]
    buckets: Option<usize>,
    /// Compare the whole remaining original in fragment mode.
    #[arg(long, global = true)]
    no_fragment_truncation: bool,
    /// Response cache directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Mock server strategy: echo_remainder, fixed_empty, fixed_text:<text>,
    /// seeded_noise[:<seed>[:<edits per 100 chars>]].
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Seed for sample subsetting and for seeded_noise without an explicit seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use a seeded subset of at most this many samples.
    #[arg(long, global = true)]
    sample_limit: Option<usize>,
    /// Comma-separated report formats (csv, json, svg).
    #[arg(long, global = true)]
    formats: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage and print a summary.
    Run,
    /// Discover corpus files.
    Scan,
    /// Build prefix prompts.
    Prefixes,
    /// Request completions for every prompt.
    Complete,
    /// Score duplicates against originals.
    Analyze,
    /// Aggregate scores and write report artifacts.
    Report,
    /// Serve the mock completion protocol until interrupted.
    MockServe(MockArgs),
}

#[derive(Debug, Args)]
struct MockArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Cap on returned characters.
    #[arg(long)]
    max_chars: Option<usize>,
    /// Artificial delay before each response.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
}

fn timestamp_from_env() -> Option<String> {
    let secs: i64 = std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()?;
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339())
}

fn build_config(args: &GlobalArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(root) = &args.corpus {
        config.corpus.root = root.clone();
    }
    if let Some(url) = &args.endpoint {
        config.endpoint.base_url = url.clone();
    }
    if let Some(token) = &args.token {
        config.endpoint.auth_token = Some(SecretToken::new(token.clone()));
    }
    if let Some(n) = args.max_parallel {
        config.endpoint.max_parallel = n;
    }
    if let Some(list) = &args.ratios {
        config.ratios = parse_ratio_list(list)?;
    }
    if let Some(b) = args.buckets {
        config.buckets = b;
    }
    if args.no_fragment_truncation {
        config.fragment_truncation = false;
    }
    if let Some(dir) = &args.cache_dir {
        config.endpoint.cache_dir = Some(dir.clone());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(limit) = args.sample_limit {
        config.sample_limit = Some(limit);
    }
    if let Some(list) = &args.formats {
        config.formats = list
            .split(',')
            .map(str::parse::<OutputFormat>)
            .collect::<Result<_, _>>()
            .map_err(anyhow::Error::msg)?;
    }
    config.timestamp = timestamp_from_env();
    config.validate()?;
    Ok(config)
}

fn parse_strategy(spec: &str, seed: u64) -> Result<MockStrategy> {
    let spec = match spec {
        "seeded_noise" | "noise" => format!("seeded_noise:{seed}"),
        other => other.to_string(),
    };
    Ok(spec.parse()?)
}

fn print_summary(bundle: &ReportBundle) {
    let c = &bundle.counts;
    println!(
        "samples {}  too short {}  rows {}  failed {}  empty {}  inherited {}  oversize {}",
        c.samples, c.too_short, c.rows, c.failed_requests, c.empty_generation, c.inherited_metrics, c.oversize_pairs
    );
    println!("model {}  endpoint {}", bundle.run_metadata.model, bundle.run_metadata.endpoint);
    println!(
        "{:>5} {:>5} {:>9} {:>9} {:>9} {:>9} {:>8} {:>10} {:>12}",
        "ratio", "rows", "ro_whole", "jw_whole", "ro_frag", "jw_frag", "cc_avg", "hal_bugs", "length_ratio"
    );
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    for m in &bundle.per_ratio_means {
        let s = m.statics.as_ref();
        println!(
            "{:>5} {:>5} {:>9} {:>9} {:>9} {:>9} {:>8} {:>10} {:>12}",
            m.ratio.to_string(),
            m.rows,
            cell(m.ro_whole),
            cell(m.jw_whole),
            cell(m.ro_fragment),
            cell(m.jw_fragment),
            cell(s.map(|s| s.cyclomatic_avg)),
            cell(s.map(|s| s.halstead_bugs)),
            cell(s.map(|s| s.length_ratio)),
        );
    }
    if let Some(r) = &bundle.reference_means {
        println!(
            "{:>5} {:>5} {:>9} {:>9} {:>9} {:>9} {:>8} {:>10} {:>12}",
            "ref",
            r.samples,
            "",
            "",
            "",
            "",
            format!("{:.4}", r.cyclomatic_avg),
            format!("{:.4}", r.halstead_bugs),
            format!("{:.4}", r.length_ratio),
        );
    }
}

fn mock_serve(global: &GlobalArgs, args: &MockArgs) -> Result<()> {
    let config = build_config(global)?;
    let strategy = parse_strategy(global.strategy.as_deref().unwrap_or("echo_remainder"), config.seed)?;
    let strategy = match args.max_chars {
        Some(n) => strategy.with_max_chars(n),
        None => strategy,
    };
    let scan = scan_corpus(&config.corpus)?;
    let server = MockServer::new(scan.samples, strategy).with_delay(Duration::from_millis(args.delay_ms));
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("invalid listen address {}:{}", args.host, args.port))?;
    eprintln!("mock server on http://{addr} ({})", server.strategy().kind.name());
    serve_until_interrupted(&server, addr)?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Command::MockServe(args) = &cli.command {
        return mock_serve(&cli.global, args);
    }
    if cli.global.strategy.is_some() {
        bail!("--strategy only applies to mock-serve");
    }
    let config = build_config(&cli.global)?;
    match &cli.command {
        Command::Run => {
            let summary = pipeline::run(&config)?;
            print_summary(&summary.bundle);
            println!("wrote {} report files to {}", summary.written.len(), config.out_dir.display());
        }
        Command::Scan => {
            let s = pipeline::stage_scan(&config)?;
            println!(
                "{} samples ({} not UTF-8, {} outside size bounds)",
                s.samples, s.skipped_non_utf8, s.skipped_by_size
            );
        }
        Command::Prefixes => {
            let s = pipeline::stage_prefixes(&config)?;
            println!("{} prefix cases, {} samples too short", s.cases, s.too_short.len());
        }
        Command::Complete => {
            let s = pipeline::stage_complete(&config)?;
            println!(
                "{} requested, {} completed ({} from cache), {} failed",
                s.requested, s.completed, s.from_cache, s.failed
            );
        }
        Command::Analyze => {
            let s = pipeline::stage_analyze(&config)?;
            println!("{} rows, {} originals not analyzable", s.rows, s.unanalyzable_originals);
        }
        Command::Report => {
            let (bundle, written) = pipeline::stage_report(&config)?;
            print_summary(&bundle);
            println!("wrote {} report files to {}", written.len(), config.out_dir.display());
        }
        Command::MockServe(_) => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
