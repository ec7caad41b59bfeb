//! Cyclic backtranslation: grow word vocabularies on both sides from a few
//! seed sentences by translating random word sequences back and forth.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExtractionError, ExtractionTrace, Recorder, Scoring, StrategyId};
use crate::bpe::{pretokenize, SubwordSequence, Vocabulary};
use crate::victim::{AccessMode, VictimError, VictimOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicParams {
    /// Words per nonsense query.
    pub k: usize,
    /// Rounds without growth on either side before stopping.
    pub patience: usize,
    pub iteration_cap: usize,
    /// Total subwords over both directions.
    pub budget: u64,
    pub seed: u64,
}

impl Default for CyclicParams {
    fn default() -> Self {
        Self {
            k: 20,
            patience: 5,
            iteration_cap: 10_000,
            budget: u64::MAX,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    CapReached,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct CyclicOutcome {
    /// Harvested words in discovery order.
    pub source_words: Vec<String>,
    pub target_words: Vec<String>,
    /// Subwords seen in backward (source-side) outputs.
    pub source_vocab: Vocabulary,
    /// Subwords seen in forward (target-side) outputs; scored by the trace.
    pub target_vocab: Vocabulary,
    pub trace: ExtractionTrace,
    pub iterations: usize,
    pub stop: StopReason,
    pub spent: u64,
}

/// Word pool with per-word sampling counts.
#[derive(Default)]
struct Pool(IndexMap<String, u64>);

impl Pool {
    /// Adds the word units of `text`; returns how many were new.
    fn absorb(&mut self, text: &str) -> usize {
        let before = self.0.len();
        for u in pretokenize::units(text) {
            if u.is_word() && !self.0.contains_key(u.text) {
                self.0.insert(u.text.to_string(), 0);
            }
        }
        self.0.len() - before
    }

    /// `k` distinct words, weight `1/(1+times sampled)`.
    fn sample(&mut self, k: usize, rng: &mut ChaCha8Rng) -> String {
        let entries: Vec<(usize, u64)> = self.0.values().copied().enumerate().collect();
        let picked: Vec<usize> = entries
            .choose_multiple_weighted(rng, k.min(entries.len()), |&(_, c)| 1.0 / (1.0 + c as f64))
            .expect("weights are finite and positive")
            .map(|&(i, _)| i)
            .collect();
        let mut words = Vec::with_capacity(picked.len());
        for i in picked {
            let (w, c) = self.0.get_index_mut(i).unwrap();
            *c += 1;
            words.push(w.clone());
        }
        words.join(" ")
    }

    fn words(&self) -> Vec<String> {
        self.0.keys().cloned().collect()
    }
}

enum Step {
    Done(SubwordSequence, u64),
    OutOfBudget,
}

fn query(oracle: &VictimOracle, text: &str, cap: u64) -> Result<Step, ExtractionError> {
    match oracle.translate_capped(&[text], cap) {
        Ok(mut r) => {
            let r = r.pop().expect("one result per query");
            let seq = r.output.subwords().expect("gray-box output").clone();
            Ok(Step::Done(seq, r.subwords_charged))
        }
        Err(VictimError::BudgetExhausted { .. }) => Ok(Step::OutOfBudget),
        Err(e) => Err(e.into()),
    }
}

/// Runs the attack. `scoring.reference` is the forward victim's vocabulary;
/// the trace scores target-side subwords against it and charges the spend
/// of both directions.
pub fn steal_cyclic<S: AsRef<str>>(
    seeds: &[S],
    forward: &VictimOracle,
    backward: &VictimOracle,
    params: CyclicParams,
    scoring: Scoring<'_>,
) -> Result<CyclicOutcome, ExtractionError> {
    for o in [forward, backward] {
        if o.access_mode() != AccessMode::GrayBox {
            return Err(ExtractionError::NotGrayBox(StrategyId::Cyclic));
        }
    }
    if params.k == 0 || params.patience == 0 {
        return Err(ExtractionError::InvalidParameter(
            "k and patience must be positive".into(),
        ));
    }
    let mut source = Pool::default();
    for s in seeds {
        source.absorb(s.as_ref());
    }
    if source.0.is_empty() {
        return Err(ExtractionError::NoSeeds);
    }
    let mut target = Pool::default();
    let mut source_vocab = Vocabulary::new();
    let mut recorder = Recorder::new(scoring);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut stop = None;
    for s in seeds {
        match query(forward, s.as_ref(), params.budget - recorder.spent())? {
            Step::Done(seq, cost) => {
                recorder.charge(cost);
                recorder.add(seq.subwords());
                target.absorb(&seq.decode().text);
            }
            Step::OutOfBudget => {
                stop = Some(StopReason::BudgetExhausted);
                break;
            }
        }
    }

    let mut iterations = 0;
    let mut stale = 0;
    while stop.is_none() {
        if iterations == params.iteration_cap {
            stop = Some(StopReason::CapReached);
            break;
        }
        iterations += 1;
        let mut grew = 0;

        let q = source.sample(params.k, &mut rng);
        match query(forward, &q, params.budget - recorder.spent())? {
            Step::Done(seq, cost) => {
                recorder.charge(cost);
                recorder.add(seq.subwords());
                grew += target.absorb(&seq.decode().text);
            }
            Step::OutOfBudget => {
                stop = Some(StopReason::BudgetExhausted);
                break;
            }
        }

        if !target.0.is_empty() {
            let q = target.sample(params.k, &mut rng);
            match query(backward, &q, params.budget - recorder.spent())? {
                Step::Done(seq, cost) => {
                    recorder.charge(cost);
                    source_vocab.extend(seq.subwords().cloned());
                    grew += source.absorb(&seq.decode().text);
                }
                Step::OutOfBudget => {
                    stop = Some(StopReason::BudgetExhausted);
                    break;
                }
            }
        }

        stale = if grew == 0 { stale + 1 } else { 0 };
        if stale >= params.patience {
            stop = Some(StopReason::Converged);
        }
    }

    let exhausted = stop == Some(StopReason::BudgetExhausted);
    let spent = recorder.spent();
    let (trace, target_vocab) = recorder.finish(StrategyId::Cyclic, exhausted);
    Ok(CyclicOutcome {
        source_words: source.words(),
        target_words: target.words(),
        source_vocab,
        target_vocab,
        trace,
        iterations,
        stop: stop.expect("loop exits with a reason"),
        spent,
    })
}
