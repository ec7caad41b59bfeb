use std::collections::HashSet;

use super::{ExtractionError, ExtractionTrace, Recorder, Scoring, StrategyId};
use crate::bpe::{pretokenize, train_bpe, SubwordSequence, Vocabulary};
use crate::corpus::Corpus;
use crate::victim::{AccessMode, QueryResult, VictimError, VictimOracle};

const BATCH: usize = 256;

/// Everything a gray-box strategy observed.
#[derive(Debug, Clone)]
pub struct Harvest {
    pub trace: ExtractionTrace,
    pub recovered: Vocabulary,
    /// Queries that were answered, in order.
    pub queries: Vec<String>,
    /// Gray-box output of each answered query.
    pub outputs: Vec<SubwordSequence>,
    pub spent: u64,
}

/// Sends `queries` in order until `budget` or the oracle's budget runs out.
pub(crate) fn drive(
    strategy: StrategyId,
    queries: Vec<String>,
    oracle: &VictimOracle,
    budget: u64,
    scoring: Scoring<'_>,
) -> Result<Harvest, ExtractionError> {
    if oracle.access_mode() != AccessMode::GrayBox {
        return Err(ExtractionError::NotGrayBox(strategy));
    }
    let before = oracle.spent();
    let mut recorder = Recorder::new(scoring);
    let mut outputs = Vec::new();
    let mut exhausted = false;
    for batch in queries.chunks(BATCH) {
        let cap = budget - recorder.spent();
        let results = match oracle.translate_capped(batch, cap) {
            Ok(r) => r,
            Err(VictimError::BudgetExhausted { partial, .. }) => {
                exhausted = true;
                partial
            }
            Err(e) => return Err(e.into()),
        };
        for QueryResult {
            output,
            subwords_charged,
            ..
        } in results
        {
            recorder.charge(subwords_charged);
            let seq = output.subwords().expect("gray-box output").clone();
            recorder.add(seq.subwords());
            outputs.push(seq);
        }
        if exhausted {
            break;
        }
    }
    let spent = recorder.spent();
    debug_assert_eq!(spent, oracle.spent() - before);
    let (trace, recovered) = recorder.finish(strategy, exhausted);
    let mut queries = queries;
    queries.truncate(outputs.len());
    Ok(Harvest {
        trace,
        recovered,
        queries,
        outputs,
        spent,
    })
}

/// BPE trained on the attacker's own data; spends no budget.
pub fn steal_local_bpe(authentic: &Corpus, target_size: usize) -> Result<Vocabulary, ExtractionError> {
    Ok(train_bpe(authentic.iter(), target_size)?.vocab().clone())
}

#[derive(Debug, Clone)]
pub struct LocalOutputs {
    pub vocab: Vocabulary,
    pub spent: u64,
    /// Detokenized victim translations of the authentic corpus.
    pub outputs: Corpus,
}

/// BPE trained on the victim's detokenized translations of `authentic`.
pub fn steal_local_bpe_on_outputs(
    authentic: &Corpus,
    oracle: &VictimOracle,
    target_size: usize,
) -> Result<LocalOutputs, ExtractionError> {
    let before = oracle.spent();
    let mut texts = Vec::with_capacity(authentic.len());
    for batch in authentic.sentences().chunks(BATCH) {
        texts.extend(oracle.translate(batch)?.into_iter().map(|r| r.output.text()));
    }
    let outputs = Corpus::new(texts, "victim-output");
    let vocab = train_bpe(outputs.iter(), target_size)?.vocab().clone();
    Ok(LocalOutputs {
        vocab,
        spent: oracle.spent() - before,
        outputs,
    })
}

pub fn steal_graybox_sentences(
    corpus: &Corpus,
    oracle: &VictimOracle,
    budget: u64,
    scoring: Scoring<'_>,
) -> Result<Harvest, ExtractionError> {
    let queries = corpus.sentences().to_vec();
    drive(StrategyId::GrayboxSentences, queries, oracle, budget, scoring)
}

/// Distinct pre-tokenized units, case-sensitive, in first-occurrence order.
pub fn unique_word_queries(corpus: &Corpus) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in corpus.iter() {
        for u in pretokenize::units(s) {
            if seen.insert(u.text) {
                out.push(u.text.to_string());
            }
        }
    }
    out
}

/// Each sentence reduced to its not-yet-queried units; punctuation stays
/// glued to whatever is kept of its chunk. Empty results are dropped.
pub fn dedup_queries(corpus: &Corpus) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in corpus.iter() {
        let mut query = String::new();
        for chunk in pretokenize::chunks(s) {
            let kept: String = chunk
                .iter()
                .filter(|u| seen.insert(u.text))
                .map(|u| u.text)
                .collect();
            if !kept.is_empty() {
                if !query.is_empty() {
                    query.push(' ');
                }
                query.push_str(&kept);
            }
        }
        if !query.is_empty() {
            out.push(query);
        }
    }
    out
}

/// Unique words minus those contained in another unique word.
pub fn minimized_queries(corpus: &Corpus) -> Vec<String> {
    let words = unique_word_queries(corpus);
    let mut inner: HashSet<&str> = HashSet::new();
    for w in &words {
        let bounds: Vec<usize> = w.char_indices().map(|(i, _)| i).chain([w.len()]).collect();
        for (a, &start) in bounds.iter().enumerate() {
            for &end in &bounds[a + 1..] {
                if end - start < w.len() {
                    inner.insert(&w[start..end]);
                }
            }
        }
    }
    words
        .iter()
        .filter(|w| !inner.contains(w.as_str()))
        .cloned()
        .collect()
}

pub fn steal_unique_words(
    corpus: &Corpus,
    oracle: &VictimOracle,
    budget: u64,
    scoring: Scoring<'_>,
) -> Result<Harvest, ExtractionError> {
    drive(StrategyId::UniqueWords, unique_word_queries(corpus), oracle, budget, scoring)
}

pub fn steal_dedup_sentences(
    corpus: &Corpus,
    oracle: &VictimOracle,
    budget: u64,
    scoring: Scoring<'_>,
) -> Result<Harvest, ExtractionError> {
    drive(StrategyId::DedupSentences, dedup_queries(corpus), oracle, budget, scoring)
}

pub fn steal_unique_words_minimized(
    corpus: &Corpus,
    oracle: &VictimOracle,
    budget: u64,
    scoring: Scoring<'_>,
) -> Result<Harvest, ExtractionError> {
    drive(
        StrategyId::UniqueWordsMinimized,
        minimized_queries(corpus),
        oracle,
        budget,
        scoring,
    )
}
