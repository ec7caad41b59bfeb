//! Reproducible sweeps over strategies and seeds.
//!
//! A run builds one victim, synthesizes one attacker corpus per seed and
//! runs every (strategy, seed) cell in parallel, each against its own
//! oracle copy. Artifacts are written per cell and then merged; every file
//! starts with the config hash.

mod config;
mod suite;

pub use config::{
    default_domains, AttackerSpec, CyclicSpec, EfficiencySpec, ExperimentConfig, GridSpec,
    VictimSpec, OUTPUT_ENV,
};
pub use suite::{efficiency_suite, Victim, ALL_ROW, VICTIM_ROW};

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{missing_subwords, AnalysisError, EfficiencyMatrix, MissingReport};
use crate::bpe::{BpeError, SubwordSequence, Vocabulary};
use crate::corpus::{stats, synthesize, CorpusError, LanguagePair, ParallelCorpus};
use crate::extraction::{
    overlap, steal_cyclic, steal_dedup_sentences, steal_graybox_sentences, steal_local_bpe,
    steal_local_bpe_on_outputs, steal_unique_words, steal_unique_words_minimized, BudgetGrid,
    CyclicParams, ExtractionError, ExtractionTrace, Harvest, Scoring, StopReason, StrategyId,
    TraceSample, TRACE_CSV_HEADER,
};
use crate::victim::{AccessMode, EvaluationOnly, VictimError, VictimOracle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Bpe(#[from] BpeError),
    #[error(transparent)]
    Victim(#[from] VictimError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl ExperimentError {
    /// Raised before any work was done.
    pub fn is_validation(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Invalid(_))
    }
}

/// Strategy-specific results beyond the trace.
#[derive(Debug, Clone, PartialEq)]
pub enum CellDetail {
    None,
    /// Unique tokens on the authentic target side and in the victim's
    /// translations of the same source sentences.
    TokenGap { authentic: usize, translated: usize },
    Cyclic {
        iterations: usize,
        stop: StopReason,
        source_words: usize,
        target_words: usize,
    },
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub strategy: StrategyId,
    pub seed: u64,
    pub trace: ExtractionTrace,
    pub recovered: Vocabulary,
    pub spent: u64,
    pub detail: CellDetail,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub victim_vocab: Vocabulary,
    /// Config order: strategies outer, seeds inner.
    pub cells: Vec<CellResult>,
    pub efficiency: Option<EfficiencyMatrix>,
    /// Built from the first seed of the first output-collecting strategy.
    pub missing: Option<(StrategyId, u64, MissingReport)>,
    pub output_dir: PathBuf,
    /// Written files relative to `output_dir`, with their SHA-256.
    pub artifacts: Vec<(String, String)>,
}

impl RunSummary {
    pub fn cell(&self, strategy: StrategyId, seed: u64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.seed == seed)
    }
}

fn single_sample(strategy: StrategyId, seed: u64, spent: u64, v: &Vocabulary, reference: &Vocabulary) -> Result<ExtractionTrace, ExperimentError> {
    Ok(ExtractionTrace {
        strategy,
        seed,
        samples: vec![TraceSample {
            budget_spent: spent,
            recovered_size: v.len(),
            overlap: overlap(v, reference)?,
        }],
        exhausted: false,
    })
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    victim: &'a Victim,
    backward: Option<&'a VictimOracle>,
    grid: &'a BudgetGrid,
    reference: &'a Vocabulary,
    report_cell: Option<(StrategyId, u64)>,
}

fn collects_outputs(s: StrategyId) -> bool {
    matches!(
        s,
        StrategyId::GrayboxSentences
            | StrategyId::DedupSentences
            | StrategyId::UniqueWords
            | StrategyId::UniqueWordsMinimized
    )
}

fn run_cell(
    cx: &Context<'_>,
    strategy: StrategyId,
    seed: u64,
    attacker: &ParallelCorpus,
) -> Result<(CellResult, Option<Vec<SubwordSequence>>), ExperimentError> {
    let budget = cx.config.budget.min(cx.config.victim.budget);
    let oracle = cx.victim.oracle.with_budget(budget);
    let scoring = Scoring {
        grid: cx.grid,
        reference: cx.reference,
        seed,
    };
    let vocab_size = cx.config.victim.vocab_size;
    let src = attacker.source();
    let harvest = |h: Harvest| {
        let keep = cx.report_cell == Some((strategy, seed));
        let outputs = keep.then_some(h.outputs);
        (
            CellResult {
                strategy,
                seed,
                trace: h.trace,
                recovered: h.recovered,
                spent: h.spent,
                detail: CellDetail::None,
            },
            outputs,
        )
    };
    Ok(match strategy {
        StrategyId::LocalBpe => {
            let v = steal_local_bpe(attacker.target(), vocab_size)?;
            let trace = single_sample(strategy, seed, 0, &v, cx.reference)?;
            let cell = CellResult {
                strategy,
                seed,
                trace,
                recovered: v,
                spent: 0,
                detail: CellDetail::None,
            };
            (cell, None)
        }
        StrategyId::LocalBpeOutputs => {
            let black = oracle.with_mode(AccessMode::BlackBox);
            let lo = steal_local_bpe_on_outputs(src, &black, vocab_size)?;
            let trace = single_sample(strategy, seed, lo.spent, &lo.vocab, cx.reference)?;
            let detail = CellDetail::TokenGap {
                authentic: stats(attacker.target())?.unique_tokens,
                translated: stats(&lo.outputs)?.unique_tokens,
            };
            let cell = CellResult {
                strategy,
                seed,
                trace,
                recovered: lo.vocab,
                spent: lo.spent,
                detail,
            };
            (cell, None)
        }
        StrategyId::GrayboxSentences => harvest(steal_graybox_sentences(src, &oracle, budget, scoring)?),
        StrategyId::UniqueWords => harvest(steal_unique_words(src, &oracle, budget, scoring)?),
        StrategyId::DedupSentences => harvest(steal_dedup_sentences(src, &oracle, budget, scoring)?),
        StrategyId::UniqueWordsMinimized => {
            harvest(steal_unique_words_minimized(src, &oracle, budget, scoring)?)
        }
        StrategyId::Cyclic => {
            let backward = cx
                .backward
                .expect("backward oracle is built when cyclic runs")
                .with_budget(budget);
            let c = &cx.config.cyclic;
            let params = CyclicParams {
                k: c.k,
                patience: c.patience,
                iteration_cap: c.iteration_cap,
                budget,
                seed,
            };
            let seeds = &src.sentences()[..c.seed_sentences];
            let out = steal_cyclic(seeds, &oracle, &backward, params, scoring)?;
            let cell = CellResult {
                strategy,
                seed,
                trace: out.trace,
                recovered: out.target_vocab,
                spent: out.spent,
                detail: CellDetail::Cyclic {
                    iterations: out.iterations,
                    stop: out.stop,
                    source_words: out.source_words.len(),
                    target_words: out.target_words.len(),
                },
            };
            (cell, None)
        }
    })
}

/// Runs the sweep described by `config` and writes its artifacts under
/// `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    config.validate()?;
    let grid = config.grid.build()?;
    let hash = config.hash();
    let language = LanguagePair::generate(&config.language)?;
    let domain = |name: &str| config.domain(name).expect("validated");

    let v = &config.victim;
    let victim = Victim::build(
        &language,
        domain(&v.domain),
        v.sentences,
        v.seed,
        v.vocab_size,
        v.access,
        v.budget,
    )?;
    let reference = victim.oracle.reveal_vocabulary(EvaluationOnly::acknowledge()).clone();
    let backward = if config.strategies.contains(&StrategyId::Cyclic) {
        Some(victim.backward()?)
    } else {
        None
    };

    let attacker_domain = domain(&config.attacker.domain);
    let corpora: Vec<ParallelCorpus> = config
        .seeds
        .par_iter()
        .map(|&s| synthesize(&language, attacker_domain, config.attacker.sentences, s))
        .collect::<Result<_, _>>()?;

    let report_cell = config
        .strategies
        .iter()
        .find(|s| collects_outputs(**s))
        .map(|&s| (s, config.seeds[0]));
    let cx = Context {
        config,
        victim: &victim,
        backward: backward.as_ref(),
        grid: &grid,
        reference: &reference,
        report_cell,
    };
    let jobs: Vec<(StrategyId, usize)> = config
        .strategies
        .iter()
        .flat_map(|&s| (0..config.seeds.len()).map(move |i| (s, i)))
        .collect();
    let results: Vec<(CellResult, Option<Vec<SubwordSequence>>)> = jobs
        .par_iter()
        .map(|&(s, i)| run_cell(&cx, s, config.seeds[i], &corpora[i]))
        .collect::<Result<_, _>>()?;

    let mut missing = None;
    let mut cells = Vec::with_capacity(results.len());
    for (cell, outputs) in results {
        if let Some(outputs) = outputs {
            let report = missing_subwords(&reference, &cell.recovered, &outputs);
            missing = Some((cell.strategy, cell.seed, report));
        }
        cells.push(cell);
    }

    let efficiency = if config.efficiency.domains.is_empty() {
        None
    } else {
        let domains: Vec<_> = config.efficiency.domains.iter().map(|d| domain(d)).collect();
        Some(efficiency_suite(
            &language,
            &domains,
            config.efficiency.sentences,
            config.efficiency.seed,
            v.vocab_size,
            Some(&victim),
        )?)
    };

    let mut summary = RunSummary {
        config_hash: hash,
        victim_vocab: reference,
        cells,
        efficiency,
        missing,
        output_dir: config.output_dir.clone(),
        artifacts: Vec::new(),
    };
    summary.artifacts = write_artifacts(config, &summary)?;
    Ok(summary)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn stop_text(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::CapReached => "cap-reached",
        StopReason::BudgetExhausted => "budget-exhausted",
    }
}

/// Writes per-cell traces, then the merged files and the manifest.
fn write_artifacts(
    config: &ExperimentConfig,
    summary: &RunSummary,
) -> Result<Vec<(String, String)>, ExperimentError> {
    let root = &config.output_dir;
    let cells_dir = root.join("cells");
    if cells_dir.exists() {
        fs::remove_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;
    }
    fs::create_dir_all(&cells_dir).map_err(io_err(&cells_dir))?;
    let stamp = format!("# config_sha256={}\n", summary.config_hash);
    let mut written = Vec::new();
    let mut write = |name: String, body: &str| -> Result<(), ExperimentError> {
        let path = root.join(&name);
        let text = format!("{stamp}{body}");
        fs::write(&path, &text).map_err(io_err(&path))?;
        written.push((name, hex::encode(Sha256::digest(text.as_bytes()))));
        Ok(())
    };

    for c in &summary.cells {
        write(format!("cells/{}.seed{}.csv", c.strategy, c.seed), &c.trace.to_csv())?;
    }
    let mut traces = format!("{TRACE_CSV_HEADER}\n");
    for c in &summary.cells {
        traces.push_str(&c.trace.csv_rows());
    }
    write("traces.csv".into(), &traces)?;

    let mut finals = String::from("strategy,seed,budget_spent,recovered_size,overlap,exhausted\n");
    for c in &summary.cells {
        let last = c.trace.last().copied().unwrap_or(TraceSample {
            budget_spent: 0,
            recovered_size: 0,
            overlap: 0.0,
        });
        finals.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            c.strategy, c.seed, c.spent, last.recovered_size, last.overlap, c.trace.exhausted
        ));
    }
    write("final.csv".into(), &finals)?;

    let gaps: Vec<String> = summary
        .cells
        .iter()
        .filter_map(|c| match c.detail {
            CellDetail::TokenGap { authentic, translated } => {
                Some(format!("{},{authentic},{translated}\n", c.seed))
            }
            _ => None,
        })
        .collect();
    if !gaps.is_empty() {
        write(
            "token_gap.csv".into(),
            &format!("seed,authentic_unique_tokens,translated_unique_tokens\n{}", gaps.concat()),
        )?;
    }

    let cyclic: Vec<String> = summary
        .cells
        .iter()
        .filter_map(|c| match c.detail {
            CellDetail::Cyclic {
                iterations,
                stop,
                source_words,
                target_words,
            } => Some(format!(
                "{},{iterations},{},{source_words},{target_words},{}\n",
                c.seed,
                stop_text(stop),
                c.spent
            )),
            _ => None,
        })
        .collect();
    if !cyclic.is_empty() {
        write(
            "cyclic.csv".into(),
            &format!("seed,iterations,stop,source_words,target_words,budget_spent\n{}", cyclic.concat()),
        )?;
    }

    if let Some(m) = &summary.efficiency {
        write("efficiency.csv".into(), &m.to_csv())?;
        write("efficiency.txt".into(), &m.to_table())?;
    }
    if let Some((s, seed, r)) = &summary.missing {
        let note = format!("# from {s} seed {seed}\n");
        write("missing.csv".into(), &format!("{note}{}", r.to_csv()))?;
        write("missing.txt".into(), &format!("{note}{}", r.to_table()))?;
    }

    let mut manifest = format!(
        "config_sha256={}\nseeds={}\nvictim_vocab_size={}\n",
        summary.config_hash,
        config.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        summary.victim_vocab.len()
    );
    for (name, digest) in &written {
        manifest.push_str(&format!("artifact {name} sha256={digest}\n"));
    }
    manifest.push_str("\n[config]\n");
    manifest.push_str(&config.identity_text());
    let path = root.join("manifest.txt");
    fs::write(&path, &manifest).map_err(io_err(&path))?;
    written.push(("manifest.txt".into(), hex::encode(Sha256::digest(manifest.as_bytes()))));
    Ok(written)
}
