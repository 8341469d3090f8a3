use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use complbench::corpus::{scan_corpus, CorpusConfig};
use complbench::mockserver::{MockHandle, MockServer, MockStrategy};

const FILES: [(&str, &str); 3] = [
    (
        "maths/fib.py",
        "def fib(n):\n    if n < 2:\n        return n\n    return fib(n - 1) + fib(n - 2)\n",
    ),
    (
        "sorts/bubble.py",
        "def bubble(xs):\n    for i in range(len(xs)):\n        for j in range(len(xs) - i - 1):\n            if xs[j] > xs[j + 1]:\n                xs[j], xs[j + 1] = xs[j + 1], xs[j]\n    return xs\n",
    ),
    (
        "strings/shout.py",
        "def shout(s):\n    return s.upper() + '!'\n\n\nprint(shout('hi'))\n",
    ),
];

fn corpus(dir: &Path) -> PathBuf {
    let root = dir.join("corpus");
    for (rel, content) in FILES {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
    }
    root
}

fn mock(root: &Path, strategy: MockStrategy) -> MockHandle {
    let samples = scan_corpus(&CorpusConfig::new(root)).unwrap().samples;
    MockServer::new(samples, strategy)
        .spawn("127.0.0.1:0".parse().unwrap())
        .unwrap()
}

fn complbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_complbench"))
        .args(args)
        .env_remove("COMPLBENCH_TOKEN")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn unused_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

const COMPARED: [&str; 3] = ["rows.csv", "summary.json", "heatmap_ratcliff_obershelp_whole_file.csv"];

#[test]
fn echo_run_writes_27_perfect_rows() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let out = dir.path().join("out");
    let server = mock(&root, MockStrategy::echo());
    let result = complbench(&["run", "--corpus", s(&root), "--out-dir", s(&out), "--endpoint", &server.base_url()]);
    assert_ok(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("rows 27"), "{stdout}");

    let mut reader = csv::Reader::from_path(out.join("rows.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 27);
    for row in &rows {
        assert_eq!(&row[col("ro_whole")], "1.000000");
        assert_eq!(&row[col("jw_whole")], "1.000000");
        assert_eq!(&row[col("hamming_whole")], "0");
        assert_eq!(&row[col("dl_whole")], "0");
        assert_eq!(&row[col("length_ratio")], "1.000000");
    }
    for name in ["summary.json", "heatmap_jaro_winkler_fragment.csv", "heatmap_hamming_whole_file.svg", "means_similarity.svg"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn unreachable_endpoint_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let out = dir.path().join("out");
    let result = complbench(&["run", "--corpus", s(&root), "--out-dir", s(&out), "--endpoint", &unused_url()]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("all requests failed"));
}

#[test]
fn cached_rerun_without_endpoint_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let cache = dir.path().join("cache");
    let first = dir.path().join("first");
    let second = dir.path().join("second");

    let server = mock(&root, MockStrategy::noise(11, 10));
    let url = server.base_url();
    assert_ok(&complbench(&[
        "run", "--corpus", s(&root), "--out-dir", s(&first), "--endpoint", &url, "--cache-dir", s(&cache),
    ]));
    server.shutdown();
    assert_ok(&complbench(&[
        "run", "--corpus", s(&root), "--out-dir", s(&second), "--endpoint", &url, "--cache-dir", s(&cache),
    ]));
    for name in COMPARED {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn stages_match_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let server = mock(&root, MockStrategy::noise(3, 5));
    let url = server.base_url();
    let full = dir.path().join("full");
    let staged = dir.path().join("staged");

    assert_ok(&complbench(&["run", "--corpus", s(&root), "--out-dir", s(&full), "--endpoint", &url]));
    for verb in ["scan", "prefixes", "complete", "analyze", "report"] {
        assert_ok(&complbench(&[verb, "--corpus", s(&root), "--out-dir", s(&staged), "--endpoint", &url]));
    }
    for name in COMPARED {
        assert_eq!(fs::read(full.join(name)).unwrap(), fs::read(staged.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let out = dir.path().join("out");
    let server = mock(&root, MockStrategy::echo());
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "ratios = [0.2, 0.4]\nbuckets = 5\nformats = [\"csv\"]\nout_dir = {:?}\n[corpus]\nroot = {:?}\n[endpoint]\nbase_url = \"http://127.0.0.1:9\"\n",
            s(&out),
            s(&root)
        ),
    )
    .unwrap();
    assert_ok(&complbench(&["run", "--config", s(&config), "--endpoint", &server.base_url(), "--ratios", "0.5"]));
    let rows = fs::read_to_string(out.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert!(rows.lines().skip(1).all(|l| l.contains(",0.5,")));
    let grid = fs::read_to_string(out.join("heatmap_hamming_whole_file.csv")).unwrap();
    assert_eq!(grid.lines().count(), 6);
    assert!(!out.join("summary.json").exists());
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let result = complbench(&["prefixes", "--out-dir", s(&out)]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("scan stage"));

    let result = complbench(&["run", "--ratios", "0.0,1.2", "--out-dir", s(&out)]);
    assert!(!result.status.success());

    let result = complbench(&["scan", "--strategy", "echo_remainder"]);
    assert!(!result.status.success());
}
