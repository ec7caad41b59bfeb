//! `subword-lab`: command-line front end.
//!
//! Exit codes: 0 success, 1 invalid arguments or config, 2 runtime failure.
//! Failures print one JSON line on stderr: `{"error": kind, "message": text}`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subword_lab::analysis::{
    correlation, efficiency_matrix, missing_subwords, permutation_p_value, Method,
    MAX_PERMUTATION_N,
};
use subword_lab::bpe::{train_bpe, BpeModel, CachedEncoder, SubwordSequence, Vocabulary};
use subword_lab::corpus::{
    ingest, stats, stats_parallel, synthesize, Corpus, DomainSpec, LanguagePair,
    LanguagePairSpec, ParallelCorpus,
};
use subword_lab::experiment::{default_domains, run, ExperimentConfig, ExperimentError};
use subword_lab::extraction::{
    steal_cyclic, steal_dedup_sentences, steal_graybox_sentences, steal_local_bpe,
    steal_local_bpe_on_outputs, steal_unique_words, steal_unique_words_minimized, BudgetGrid,
    CyclicParams, ExtractionTrace, Scoring, StrategyId, TraceSample,
};
use subword_lab::victim::{
    load_bundle, render, save_bundle, AccessMode, EvaluationOnly, Lexicon, VictimOracle,
};

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn line(&self) -> String {
        let (kind, message) = match self {
            Failure::Validation(m) => ("validation", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            invalid(e)
        } else {
            runtime(e)
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn parse_budget(s: &str) -> std::result::Result<u64, String> {
    match s {
        "unlimited" => Ok(u64::MAX),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

fn parse_labelled(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((l, p)) if !l.is_empty() && !p.is_empty() => Ok((l.to_string(), PathBuf::from(p))),
        _ => Err("expected LABEL=PATH".into()),
    }
}

#[derive(Parser)]
#[command(name = "subword-lab", version, about = "BPE vocabulary extraction laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a BPE model and write its merge table.
    TrainBpe(TrainBpe),
    /// Segment sentences into "@@"-marked subwords, one per line.
    Encode(Encode),
    /// Join "@@"-marked subwords back into text.
    Decode(Decode),
    /// Corpus statistics as CSV (metric,language,value).
    CorpusStats(CorpusStats),
    /// Generate a synthetic parallel corpus and its lexicon.
    SynthCorpus(SynthCorpus),
    /// Train a victim on hidden data and save it as a bundle.
    MakeVictim(MakeVictim),
    /// Run one extraction strategy against a victim bundle.
    Steal(Steal),
    /// Cross-domain vocabulary efficiency table.
    EfficiencyMatrix(Efficiency),
    /// Victim subwords missing from a recovered vocabulary.
    AnalyzeMissing(AnalyzeMissing),
    /// Pearson and Spearman correlation with p-values.
    Correlate(Correlate),
    /// Run a full experiment sweep from a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct TrainBpe {
    /// Training text, one sentence per line.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Vocabulary size: alphabet plus merges.
    #[arg(long)]
    size: usize,
    /// Merge table output.
    #[arg(long)]
    output: PathBuf,
    /// Optional vocabulary output.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct Encode {
    #[arg(long)]
    merges: PathBuf,
    /// Defaults to stdin.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct Decode {
    /// Defaults to stdin.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusStats {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "L1")]
    language: String,
    /// Aligned second side; statistics then cover both.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, default_value = "L2")]
    target_language: String,
}

#[derive(Args)]
struct LanguageArgs {
    #[arg(long, default_value_t = 1)]
    language_seed: u64,
    #[arg(long, default_value_t = 6000)]
    stems: usize,
    #[arg(long)]
    synonym_rate: Option<f64>,
    #[arg(long)]
    agreement_rate: Option<f64>,
}

impl LanguageArgs {
    fn spec(&self) -> LanguagePairSpec {
        let mut spec = LanguagePairSpec {
            seed: self.language_seed,
            stems: self.stems,
            ..Default::default()
        };
        if let Some(r) = self.synonym_rate {
            spec.synonym_rate = r;
        }
        if let Some(r) = self.agreement_rate {
            spec.agreement_rate = r;
        }
        spec
    }
}

#[derive(Args)]
struct SynthCorpus {
    #[command(flatten)]
    language: LanguageArgs,
    /// Preset domain: web, forum or patents; flags below adjust it.
    #[arg(long, default_value = "web")]
    domain: String,
    #[arg(long)]
    zipf: Option<f64>,
    #[arg(long)]
    ranking_mix: Option<f64>,
    #[arg(long)]
    ranking_seed: Option<u64>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    punctuation: Option<f64>,
    #[arg(long)]
    sentences: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    source_out: PathBuf,
    #[arg(long)]
    target_out: PathBuf,
    /// Word-level lexicon (TSV) for `make-victim`.
    #[arg(long)]
    lexicon_out: Option<PathBuf>,
}

#[derive(Args)]
struct MakeVictim {
    /// Hidden source-side training sentences.
    #[arg(long)]
    hidden_source: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, default_value_t = 4000)]
    size: usize,
    #[arg(long, default_value = "gray-box")]
    mode: AccessMode,
    #[arg(long, default_value = "unlimited", value_parser = parse_budget)]
    budget: u64,
    /// Build the reverse direction: BPE on the hidden source, inverted
    /// lexicon.
    #[arg(long)]
    reverse: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Steal {
    #[arg(long)]
    victim: PathBuf,
    #[arg(long)]
    strategy: StrategyId,
    /// Attacker sentences; for local-bpe, authentic target-side text.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "unlimited", value_parser = parse_budget)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest power-of-two grid point.
    #[arg(long, default_value_t = 1 << 40)]
    grid_max: u64,
    /// Trace CSV output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    vocab_out: Option<PathBuf>,
    /// Gray-box outputs, one "@@"-marked line per query.
    #[arg(long)]
    outputs_out: Option<PathBuf>,
    /// Reverse-direction bundle, required by cyclic.
    #[arg(long)]
    backward: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 10_000)]
    iteration_cap: usize,
    /// Leading corpus lines used as cyclic seeds.
    #[arg(long, default_value_t = 1)]
    seed_sentences: usize,
}

#[derive(Args)]
struct Efficiency {
    /// LABEL=merges file; one per row.
    #[arg(long = "model", required = true, value_parser = parse_labelled)]
    models: Vec<(String, PathBuf)>,
    /// LABEL=text file; one per column, labels must match a model.
    #[arg(long = "dataset", required = true, value_parser = parse_labelled)]
    datasets: Vec<(String, PathBuf)>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeMissing {
    #[arg(long)]
    victim_vocab: PathBuf,
    #[arg(long)]
    recovered: PathBuf,
    /// Gray-box outputs, one "@@"-marked line each.
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct Correlate {
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "y")]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "x")]
    y: Vec<f64>,
    /// CSV with a header row; use with --x-col and --y-col.
    #[arg(long, conflicts_with_all = ["x", "y"], requires_all = ["x_col", "y_col"])]
    input: Option<PathBuf>,
    #[arg(long)]
    x_col: Option<String>,
    #[arg(long)]
    y_col: Option<String>,
    /// Add exact permutation p-values (at most 10 points).
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Defaults apply to every key the file leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the output directory from the config and the environment.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Validate and print the resolved config without running.
    #[arg(long)]
    dry_run: bool,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_corpus(path: &Path, language: &str) -> Result<Corpus> {
    let ing = ingest(path, language).map_err(runtime)?;
    if ing.dropped > 0 {
        eprintln!("{}: dropped {} empty lines", path.display(), ing.dropped);
    }
    Ok(ing.corpus)
}

fn load_model(path: &Path) -> Result<BpeModel> {
    BpeModel::load_merges(&read_text(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::from_file_str(&read_text(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn input_lines(input: Option<&Path>) -> Result<Vec<String>> {
    let mut text = String::new();
    match input {
        Some(p) => text = read_text(p)?,
        None => {
            io::stdin().read_to_string(&mut text).map_err(runtime)?;
        }
    }
    Ok(text.lines().map(str::to_string).collect())
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).map_err(runtime)?;
    out.flush().map_err(runtime)
}

fn train_cmd(a: TrainBpe) -> Result<()> {
    let mut corpora = Vec::new();
    for p in &a.input {
        corpora.push(load_corpus(p, "text")?);
    }
    let model = train_bpe(corpora.iter().flat_map(Corpus::iter), a.size).map_err(invalid)?;
    write_text(&a.output, &model.save_merges())?;
    if let Some(v) = &a.vocab {
        write_text(v, &model.vocab().to_file_string())?;
    }
    emit(&format!(
        "alphabet {} merges {} vocab {}{}\n",
        model.alphabet().len(),
        model.merges().len(),
        model.vocab().len(),
        if model.stopped_early() { " (stopped early)" } else { "" }
    ))
}

fn encode_cmd(a: Encode) -> Result<()> {
    let model = load_model(&a.merges)?;
    let mut enc = CachedEncoder::new(&model);
    let mut out = String::new();
    for line in input_lines(a.input.as_deref())? {
        out.push_str(&enc.encode(&line).to_string());
        out.push('\n');
    }
    emit(&out)
}

fn decode_cmd(a: Decode) -> Result<()> {
    let mut out = String::new();
    for line in input_lines(a.input.as_deref())? {
        out.push_str(&SubwordSequence::parse(&line).decode().text);
        out.push('\n');
    }
    emit(&out)
}

fn stats_cmd(a: CorpusStats) -> Result<()> {
    let source = load_corpus(&a.input, &a.language)?;
    let s = match &a.target {
        Some(t) => {
            let target = load_corpus(t, &a.target_language)?;
            let pair = ParallelCorpus::new(source, target).map_err(invalid)?;
            stats_parallel(&pair)
        }
        None => stats(&source),
    }
    .map_err(invalid)?;
    emit(&s.to_csv())
}

fn synth_cmd(a: SynthCorpus) -> Result<()> {
    let mut d: DomainSpec = default_domains()
        .into_iter()
        .find(|d| d.name == a.domain)
        .unwrap_or_else(|| DomainSpec::new(&a.domain));
    d.zipf_exponent = a.zipf.unwrap_or(d.zipf_exponent);
    d.ranking_mix = a.ranking_mix.unwrap_or(d.ranking_mix);
    d.ranking_seed = a.ranking_seed.unwrap_or(d.ranking_seed);
    d.min_len = a.min_len.unwrap_or(d.min_len);
    d.max_len = a.max_len.unwrap_or(d.max_len);
    d.punctuation_rate = a.punctuation.unwrap_or(d.punctuation_rate);
    d.validate().map_err(invalid)?;
    let language = LanguagePair::generate(&a.language.spec()).map_err(invalid)?;
    let pair = synthesize(&language, &d, a.sentences, a.seed).map_err(invalid)?;
    write_text(&a.source_out, &pair.source().to_text())?;
    write_text(&a.target_out, &pair.target().to_text())?;
    if let Some(p) = &a.lexicon_out {
        write_text(p, &language.lexicon().to_tsv())?;
    }
    Ok(())
}

fn make_victim_cmd(a: MakeVictim) -> Result<()> {
    let lexicon = Lexicon::from_tsv(&read_text(&a.lexicon)?).map_err(invalid)?;
    let hidden = load_corpus(&a.hidden_source, "L1")?;
    let (lexicon, model) = if a.reverse {
        let model = train_bpe(hidden.iter(), a.size).map_err(invalid)?;
        (lexicon.inverse(), model)
    } else {
        let rendered: Vec<String> = hidden.iter().map(|s| render(&lexicon, s)).collect();
        let model = train_bpe(rendered.iter().map(String::as_str), a.size).map_err(invalid)?;
        (lexicon, model)
    };
    let oracle = VictimOracle::new(model, lexicon, a.mode, a.budget);
    save_bundle(&oracle, &a.out).map_err(runtime)?;
    emit(&format!(
        "victim vocab {} mode {} -> {}\n",
        oracle.reveal_vocabulary(EvaluationOnly::acknowledge()).len(),
        a.mode,
        a.out.display()
    ))
}

fn steal_cmd(a: Steal) -> Result<()> {
    // everything is checked before the first query
    let grid = BudgetGrid::powers_of_two(a.grid_max).map_err(invalid)?;
    let oracle = load_bundle(&a.victim).map_err(runtime)?;
    let graybox = !matches!(a.strategy, StrategyId::LocalBpe | StrategyId::LocalBpeOutputs);
    if graybox && oracle.access_mode() != AccessMode::GrayBox {
        return Err(invalid(format!("{} needs a gray-box victim", a.strategy)));
    }
    let backward = match (a.strategy, &a.backward) {
        (StrategyId::Cyclic, None) => return Err(invalid("cyclic needs --backward")),
        (StrategyId::Cyclic, Some(dir)) => {
            let b = load_bundle(dir).map_err(runtime)?;
            if b.access_mode() != AccessMode::GrayBox {
                return Err(invalid("cyclic needs a gray-box backward victim"));
            }
            Some(b)
        }
        _ => None,
    };
    if a.strategy == StrategyId::Cyclic && (a.k == 0 || a.patience == 0 || a.seed_sentences == 0) {
        return Err(invalid("k, patience and seed-sentences must be positive"));
    }
    let corpus = load_corpus(&a.corpus, "attacker")?;
    if corpus.is_empty() {
        return Err(invalid("attacker corpus is empty"));
    }
    let reference = oracle.reveal_vocabulary(EvaluationOnly::acknowledge()).clone();
    let size = oracle.reveal_parts(EvaluationOnly::acknowledge()).0.target_size();
    let scoring = Scoring {
        grid: &grid,
        reference: &reference,
        seed: a.seed,
    };
    let single = |spent: u64, v: &Vocabulary| -> Result<ExtractionTrace> {
        Ok(ExtractionTrace {
            strategy: a.strategy,
            seed: a.seed,
            samples: vec![TraceSample {
                budget_spent: spent,
                recovered_size: v.len(),
                overlap: subword_lab::extraction::overlap(v, &reference).map_err(runtime)?,
            }],
            exhausted: false,
        })
    };
    let budget = a.budget;
    let capped = oracle.with_budget(budget.min(oracle.remaining_budget()));
    let (trace, vocab, outputs) = match a.strategy {
        StrategyId::LocalBpe => {
            let v = steal_local_bpe(&corpus, size).map_err(invalid)?;
            (single(0, &v)?, v, None)
        }
        StrategyId::LocalBpeOutputs => {
            let black = capped.with_mode(AccessMode::BlackBox);
            let lo = steal_local_bpe_on_outputs(&corpus, &black, size).map_err(runtime)?;
            (single(lo.spent, &lo.vocab)?, lo.vocab, None)
        }
        StrategyId::Cyclic => {
            let backward = backward.expect("checked above");
            let backward = backward.with_budget(budget.min(backward.remaining_budget()));
            let n = a.seed_sentences.min(corpus.len());
            let params = CyclicParams {
                k: a.k,
                patience: a.patience,
                iteration_cap: a.iteration_cap,
                budget,
                seed: a.seed,
            };
            let out = steal_cyclic(&corpus.sentences()[..n], &capped, &backward, params, scoring)
                .map_err(runtime)?;
            eprintln!(
                "cyclic: {:?} after {} iterations, {} source / {} target words",
                out.stop,
                out.iterations,
                out.source_words.len(),
                out.target_words.len()
            );
            (out.trace, out.target_vocab, None)
        }
        s => {
            let h = match s {
                StrategyId::GrayboxSentences => steal_graybox_sentences(&corpus, &capped, budget, scoring),
                StrategyId::UniqueWords => steal_unique_words(&corpus, &capped, budget, scoring),
                StrategyId::DedupSentences => steal_dedup_sentences(&corpus, &capped, budget, scoring),
                _ => steal_unique_words_minimized(&corpus, &capped, budget, scoring),
            }
            .map_err(runtime)?;
            (h.trace, h.recovered, Some(h.outputs))
        }
    };
    write_text(&a.out, &trace.to_csv())?;
    if let Some(p) = &a.vocab_out {
        write_text(p, &vocab.to_file_string())?;
    }
    if let Some(p) = &a.outputs_out {
        let lines: String = outputs
            .unwrap_or_default()
            .iter()
            .map(|s| format!("{s}\n"))
            .collect();
        write_text(p, &lines)?;
    }
    let last = trace.last().copied();
    emit(&format!(
        "{} spent {} recovered {} overlap {:.4}{}\n",
        a.strategy,
        trace.total_spent(),
        vocab.len(),
        last.map_or(0.0, |s| s.overlap),
        if trace.exhausted { " (budget exhausted)" } else { "" }
    ))
}

fn efficiency_cmd(a: Efficiency) -> Result<()> {
    let mut models = Vec::new();
    for (label, path) in &a.models {
        models.push((label.clone(), load_model(path)?));
    }
    let mut datasets = Vec::new();
    for (label, path) in &a.datasets {
        datasets.push((label.clone(), load_corpus(path, label)?));
    }
    let m: Vec<(String, &BpeModel)> = models.iter().map(|(l, m)| (l.clone(), m)).collect();
    let d: Vec<(String, &Corpus)> = datasets.iter().map(|(l, c)| (l.clone(), c)).collect();
    let matrix = efficiency_matrix(&m, &d).map_err(invalid)?;
    if let Some(p) = &a.csv {
        write_text(p, &matrix.to_csv())?;
    }
    emit(&matrix.to_table())
}

fn missing_cmd(a: AnalyzeMissing) -> Result<()> {
    let victim = load_vocab(&a.victim_vocab)?;
    let recovered = load_vocab(&a.recovered)?;
    let outputs: Vec<SubwordSequence> = read_text(&a.outputs)?
        .lines()
        .map(SubwordSequence::parse)
        .collect();
    let report = missing_subwords(&victim, &recovered, &outputs);
    if let Some(p) = &a.csv {
        write_text(p, &report.to_csv())?;
    }
    emit(&report.to_table())
}

fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(runtime)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid(format!("no column {name:?}")))
    };
    let (xi, yi) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(runtime)?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|e| invalid(format!("row {}: {e}", i + 2)))
        };
        xs.push(num(xi)?);
        ys.push(num(yi)?);
    }
    Ok((xs, ys))
}

fn correlate_cmd(a: Correlate) -> Result<()> {
    let (x, y) = match &a.input {
        Some(p) => read_columns(
            p,
            a.x_col.as_deref().unwrap_or_default(),
            a.y_col.as_deref().unwrap_or_default(),
        )?,
        None => (a.x.clone(), a.y.clone()),
    };
    if a.exact && x.len() > MAX_PERMUTATION_N {
        return Err(invalid(format!("--exact supports at most {MAX_PERMUTATION_N} points")));
    }
    let c = correlation(&x, &y).map_err(invalid)?;
    let mut out = String::from("n,pearson,pearson_p,spearman,spearman_p");
    if a.exact {
        out.push_str(",pearson_exact_p,spearman_exact_p");
    }
    out.push_str(&format!(
        "\n{},{},{},{},{}",
        c.n, c.pearson, c.pearson_p, c.spearman, c.spearman_p
    ));
    if a.exact {
        let pe = permutation_p_value(&x, &y, Method::Pearson).map_err(invalid)?;
        let se = permutation_p_value(&x, &y, Method::Spearman).map_err(invalid)?;
        out.push_str(&format!(",{pe},{se}"));
    }
    out.push('\n');
    emit(&out)
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let text = match &a.config {
        Some(p) => read_text(p)?,
        None => String::new(),
    };
    let mut config = ExperimentConfig::parse(&text)
        .map_err(|e| invalid(format!("invalid config: {e}")))?
        .with_env_override();
    if let Some(dir) = a.output {
        config.output_dir = dir;
    }
    if a.dry_run {
        return emit(&format!("# config_sha256={}\n{}", config.hash(), config.to_text()));
    }
    let summary = run(&config)?;
    let mut out = format!(
        "config_sha256={}\noutput {}\n",
        summary.config_hash,
        summary.output_dir.display()
    );
    for c in &summary.cells {
        out.push_str(&format!(
            "{:<24} seed {:<4} spent {:>12} overlap {:.4}\n",
            c.strategy.to_string(),
            c.seed,
            c.spent,
            c.trace.final_overlap()
        ));
    }
    if let Some(m) = &summary.efficiency {
        out.push('\n');
        out.push_str(&m.to_table());
    }
    emit(&out)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::TrainBpe(a) => train_cmd(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Decode(a) => decode_cmd(a),
        Command::CorpusStats(a) => stats_cmd(a),
        Command::SynthCorpus(a) => synth_cmd(a),
        Command::MakeVictim(a) => make_victim_cmd(a),
        Command::Steal(a) => steal_cmd(a),
        Command::EfficiencyMatrix(a) => efficiency_cmd(a),
        Command::AnalyzeMissing(a) => missing_cmd(a),
        Command::Correlate(a) => correlate_cmd(a),
        Command::Run(a) => run_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let f = invalid(e.kind());
            eprintln!("{}", f.line());
            return ExitCode::from(f.code());
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code())
        }
    }
}
