use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subword-lab"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr is empty");
    serde_json::from_str(last).expect("last stderr line is JSON")
}

/// Hidden corpus, attacker corpus, lexicon and a forward/backward victim.
fn fixture(dir: &Path) {
    ok(dir, &[
        "synth-corpus", "--stems", "800", "--sentences", "1500", "--seed", "1",
        "--source-out", "h.src", "--target-out", "h.tgt", "--lexicon-out", "lex.tsv",
    ]);
    ok(dir, &[
        "synth-corpus", "--stems", "800", "--sentences", "800", "--seed", "2",
        "--source-out", "a.src", "--target-out", "a.tgt",
    ]);
    ok(dir, &["make-victim", "--hidden-source", "h.src", "--lexicon", "lex.tsv", "--size", "400", "--out", "vic"]);
    ok(dir, &[
        "make-victim", "--hidden-source", "h.src", "--lexicon", "lex.tsv", "--size", "400", "--out", "back",
        "--reverse",
    ]);
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("train.txt"), "low lower lowest\nnewer newest wider\nlow low lower\n").unwrap();
    let summary = ok(d, &["train-bpe", "--input", "train.txt", "--size", "20", "--output", "m.txt", "--vocab", "v.txt"]);
    assert!(summary.contains("vocab"));
    assert!(fs::read_to_string(d.join("m.txt")).unwrap().starts_with("#subword-lab merges v1"));

    let mut child = bin()
        .current_dir(d)
        .args(["encode", "--merges", "m.txt"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"lowest newer, wider\nslow\n").unwrap();
    let encoded = child.wait_with_output().unwrap();
    assert!(encoded.status.success());
    let encoded = String::from_utf8(encoded.stdout).unwrap();
    assert_eq!(encoded.lines().count(), 2);
    assert!(encoded.contains("@@"));

    fs::write(d.join("enc.txt"), &encoded).unwrap();
    let decoded = ok(d, &["decode", "--input", "enc.txt"]);
    assert_eq!(decoded, "lowest newer, wider\nslow\n");
}

#[test]
fn corpus_stats_is_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.txt"), "a b c\n\na b\n").unwrap();
    let out = ok(d, &["corpus-stats", "--input", "a.txt"]);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["metric", "language", "value"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let get = |m: &str| rows.iter().find(|r| &r[0] == m).map(|r| r[2].to_string());
    assert_eq!(get("lines").as_deref(), Some("2"));
    assert_eq!(get("unique_tokens").as_deref(), Some("3"));
}

#[test]
fn steal_strategies_and_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for strategy in ["graybox-sentences", "unique-words", "dedup-sentences", "unique-words-minimized"] {
        let trace = format!("{strategy}.csv");
        let vocab = format!("{strategy}.vocab");
        let outputs = format!("{strategy}.out");
        ok(d, &[
            "steal", "--victim", "vic", "--strategy", strategy, "--corpus", "a.src", "--seed", "3",
            "--out", &trace, "--vocab-out", &vocab, "--outputs-out", &outputs,
        ]);
        let text = fs::read_to_string(d.join(&trace)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("strategy,seed,budget_spent,recovered_size,overlap"));
        let mut last = 0u64;
        for l in lines {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[0], strategy);
            let spent: u64 = f[2].parse().unwrap();
            assert!(spent > last);
            last = spent;
        }
    }
    ok(d, &["steal", "--victim", "vic", "--strategy", "local-bpe", "--corpus", "a.tgt", "--out", "lb.csv"]);
    ok(d, &["steal", "--victim", "vic", "--strategy", "local-bpe-outputs", "--corpus", "a.src", "--out", "lbo.csv"]);
    let cyc = ok(d, &[
        "steal", "--victim", "vic", "--backward", "back", "--strategy", "cyclic", "--corpus", "a.src",
        "--k", "5", "--iteration-cap", "20", "--out", "cyc.csv",
    ]);
    assert!(cyc.starts_with("cyclic spent"));

    let report = ok(d, &[
        "analyze-missing", "--victim-vocab", "vic/vocab.txt", "--recovered", "unique-words.vocab",
        "--outputs", "unique-words.out", "--csv", "missing.csv",
    ]);
    assert!(report.starts_with("victim 400"));
    assert!(fs::read_to_string(d.join("missing.csv")).unwrap().starts_with("subword,"));

    ok(d, &["train-bpe", "--input", "h.tgt", "--size", "300", "--output", "t.merges"]);
    ok(d, &["train-bpe", "--input", "h.src", "--size", "300", "--output", "s.merges"]);
    let table = ok(d, &[
        "efficiency-matrix", "--model", "tgt=t.merges", "--model", "src=s.merges", "--dataset", "tgt=a.tgt",
        "--dataset", "src=a.src", "--csv", "eff.csv",
    ]);
    assert!(table.contains("1.00*"));
}

#[test]
fn steal_runs_identically_twice() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for out in ["x.csv", "y.csv"] {
        ok(d, &["steal", "--victim", "vic", "--strategy", "unique-words", "--corpus", "a.src", "--seed", "9", "--out", out]);
    }
    assert_eq!(fs::read(d.join("x.csv")).unwrap(), fs::read(d.join("y.csv")).unwrap());
}

#[test]
fn budget_caps_spend() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let out = ok(d, &[
        "steal", "--victim", "vic", "--strategy", "graybox-sentences", "--corpus", "a.src", "--budget", "500",
        "--out", "t.csv",
    ]);
    assert!(out.contains("budget exhausted"), "{out}");
    let text = fs::read_to_string(d.join("t.csv")).unwrap();
    let spent: u64 = text.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(spent <= 500);
}

#[test]
fn validation_errors_exit_one_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);

    let out = run_in(d, &["steal", "--victim", "vic", "--strategy", "nonsense", "--corpus", "a.src", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "validation");

    let out = run_in(d, &["steal", "--victim", "vic", "--strategy", "cyclic", "--corpus", "a.src", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("t.csv").exists());

    ok(d, &["make-victim", "--hidden-source", "h.src", "--lexicon", "lex.tsv", "--size", "400", "--out", "bb", "--mode", "black-box"]);
    let out = run_in(d, &["steal", "--victim", "bb", "--strategy", "unique-words", "--corpus", "a.src", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("gray-box"));

    let out = run_in(d, &["correlate", "--x", "1,2", "--y", "1,2,3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["encode", "--merges", "missing.txt", "--input", "missing.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "runtime");
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["steal", "--help"]] {
        assert_eq!(run_in(dir.path(), args).status.code(), Some(0));
    }
}

#[test]
fn correlate_flags_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["correlate", "--x", "1,2,3,4,5", "--y", "2,1,4,3,5", "--exact"]);
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 5.0);
    assert!((row[1] - 0.8).abs() < 1e-12);
    assert!((row[3] - 0.8).abs() < 1e-12);

    fs::write(d.join("m.csv"), "a,b\n1,10\n2,20\n3,40\n").unwrap();
    let out = ok(d, &["correlate", "--input", "m.csv", "--x-col", "a", "--y-col", "b"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "1");
}

const SMALL: &str = "\
language.stems = 800
victim.sentences = 1500
victim.vocab_size = 400
attacker.sentences = 600
attack.seeds = 1, 2
attack.grid = powers-of-two:16
cyclic.k = 4
cyclic.iteration_cap = 10
efficiency.sentences = 400
output.dir = from_config
";

#[test]
fn run_output_precedence_and_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("small.conf"), SMALL).unwrap();

    let dry = ok(d, &["run", "--config", "small.conf", "--dry-run"]);
    assert!(dry.starts_with("# config_sha256="));
    assert!(!d.join("from_config").exists());

    let env_run = bin()
        .current_dir(d)
        .env("SUBWORD_LAB_OUTPUT", "from_env")
        .args(["run", "--config", "small.conf"])
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert!(d.join("from_env/manifest.txt").exists());

    let flag_run = bin()
        .current_dir(d)
        .env("SUBWORD_LAB_OUTPUT", "from_env2")
        .args(["run", "--config", "small.conf", "--output", "from_flag"])
        .output()
        .unwrap();
    assert!(flag_run.status.success());
    assert!(d.join("from_flag/manifest.txt").exists());
    assert!(!d.join("from_env2").exists());

    for f in ["final.csv", "traces.csv", "efficiency.csv", "manifest.txt"] {
        assert_eq!(
            fs::read(d.join("from_env").join(f)).unwrap(),
            fs::read(d.join("from_flag").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn run_rejects_bad_config_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.conf"), "output.dir = never\nattack.strategies = gray, nope\n").unwrap();
    let out = run_in(d, &["run", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "validation");
    assert!(!d.join("never").exists());
}
