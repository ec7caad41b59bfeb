//! Vocabulary-recovery strategies and budget traces.
//!
//! Every gray-box strategy reduces to a list of query strings sent in
//! order until the budget runs out; the recovered vocabulary is the set of
//! output subwords seen so far.

mod cyclic;
mod strategies;

pub use cyclic::{steal_cyclic, CyclicOutcome, CyclicParams, StopReason};
pub use strategies::{
    dedup_queries, minimized_queries, steal_dedup_sentences, steal_graybox_sentences,
    steal_local_bpe, steal_local_bpe_on_outputs, steal_unique_words,
    steal_unique_words_minimized, unique_word_queries, Harvest, LocalOutputs,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bpe::{BpeError, Subword, Vocabulary};
use crate::victim::VictimError;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("overlap is undefined for an empty vocabulary")]
    EmptyVocabulary,
    #[error("strategy {0} needs a gray-box oracle")]
    NotGrayBox(StrategyId),
    #[error("cyclic attack needs at least one seed sentence with a word in it")]
    NoSeeds,
    #[error("invalid budget grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Victim(#[from] VictimError),
    #[error(transparent)]
    Bpe(#[from] BpeError),
}

/// `2·|a∩b| / (|a|+|b|)`.
pub fn overlap(a: &Vocabulary, b: &Vocabulary) -> Result<f64, ExtractionError> {
    if a.is_empty() || b.is_empty() {
        return Err(ExtractionError::EmptyVocabulary);
    }
    Ok(overlap_from_counts(a.intersection_len(b), a.len(), b.len()))
}

fn overlap_from_counts(common: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        return 0.0;
    }
    2.0 * common as f64 / (a + b) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    LocalBpe,
    LocalBpeOutputs,
    GrayboxSentences,
    UniqueWords,
    DedupSentences,
    UniqueWordsMinimized,
    Cyclic,
}

impl StrategyId {
    pub const ALL: [StrategyId; 7] = [
        StrategyId::LocalBpe,
        StrategyId::LocalBpeOutputs,
        StrategyId::GrayboxSentences,
        StrategyId::UniqueWords,
        StrategyId::DedupSentences,
        StrategyId::UniqueWordsMinimized,
        StrategyId::Cyclic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::LocalBpe => "local-bpe",
            StrategyId::LocalBpeOutputs => "local-bpe-outputs",
            StrategyId::GrayboxSentences => "graybox-sentences",
            StrategyId::UniqueWords => "unique-words",
            StrategyId::DedupSentences => "dedup-sentences",
            StrategyId::UniqueWordsMinimized => "unique-words-minimized",
            StrategyId::Cyclic => "cyclic",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// Budgets (in output subwords) at which traces are sampled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetGrid(Vec<u64>);

impl BudgetGrid {
    /// `1, 2, 4, ...` up to and including the largest power not above `max`.
    pub fn powers_of_two(max: u64) -> Result<Self, ExtractionError> {
        if max == 0 {
            return Err(ExtractionError::InvalidGrid("maximum budget is zero".into()));
        }
        Ok(Self(
            (0..64).map(|e| 1u64 << e).take_while(|&b| b <= max).collect(),
        ))
    }

    pub fn explicit(points: Vec<u64>) -> Result<Self, ExtractionError> {
        if points.is_empty() {
            return Err(ExtractionError::InvalidGrid("no grid points".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExtractionError::InvalidGrid("points must strictly increase".into()));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub budget_spent: u64,
    pub recovered_size: usize,
    pub overlap: f64,
}

/// Recovery progress as a function of budget.
///
/// A sample at budget `b` describes the state after every query that fits
/// within `b`; the last sample is at the total spend.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionTrace {
    pub strategy: StrategyId,
    pub seed: u64,
    pub samples: Vec<TraceSample>,
    /// A query was refused for lack of budget.
    pub exhausted: bool,
}

pub const TRACE_CSV_HEADER: &str = "strategy,seed,budget_spent,recovered_size,overlap";

impl ExtractionTrace {
    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }

    pub fn final_overlap(&self) -> f64 {
        self.last().map_or(0.0, |s| s.overlap)
    }

    pub fn total_spent(&self) -> u64 {
        self.last().map_or(0, |s| s.budget_spent)
    }

    /// Overlap reached within `budget`: the last sample not above it.
    pub fn overlap_at(&self, budget: u64) -> f64 {
        self.samples
            .iter()
            .take_while(|s| s.budget_spent <= budget)
            .last()
            .map_or(0.0, |s| s.overlap)
    }

    /// CSV rows without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                self.strategy, self.seed, s.budget_spent, s.recovered_size, s.overlap
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{TRACE_CSV_HEADER}\n{}", self.csv_rows())
    }
}

/// Scoring context shared by the gray-box strategies.
#[derive(Debug, Clone, Copy)]
pub struct Scoring<'a> {
    pub grid: &'a BudgetGrid,
    /// Victim vocabulary, used only to score the trace.
    pub reference: &'a Vocabulary,
    /// Label written into the trace.
    pub seed: u64,
}

/// Builds a trace while subwords arrive.
pub(crate) struct Recorder<'a> {
    scoring: Scoring<'a>,
    next_point: usize,
    spent: u64,
    recovered: Vocabulary,
    hits: usize,
    samples: Vec<TraceSample>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(scoring: Scoring<'a>) -> Self {
        Self {
            scoring,
            next_point: 0,
            spent: 0,
            recovered: Vocabulary::new(),
            hits: 0,
            samples: Vec::new(),
        }
    }

    fn sample_at(&self, budget: u64) -> TraceSample {
        TraceSample {
            budget_spent: budget,
            recovered_size: self.recovered.len(),
            overlap: overlap_from_counts(
                self.hits,
                self.recovered.len(),
                self.scoring.reference.len(),
            ),
        }
    }

    /// Charges `cost`, first sampling every grid point that the state before
    /// this query already satisfies.
    pub(crate) fn charge(&mut self, cost: u64) {
        let points = self.scoring.grid.points();
        while self.next_point < points.len() && points[self.next_point] < self.spent + cost {
            if points[self.next_point] >= self.spent {
                let s = self.sample_at(points[self.next_point]);
                self.samples.push(s);
            }
            self.next_point += 1;
        }
        self.spent += cost;
    }

    pub(crate) fn add<'s>(&mut self, subwords: impl IntoIterator<Item = &'s Subword>) {
        for sw in subwords {
            if !self.recovered.contains(sw) {
                if self.scoring.reference.contains(sw) {
                    self.hits += 1;
                }
                self.recovered.insert(sw.clone());
            }
        }
    }

    pub(crate) fn spent(&self) -> u64 {
        self.spent
    }

    pub(crate) fn finish(mut self, strategy: StrategyId, exhausted: bool) -> (ExtractionTrace, Vocabulary) {
        if self.samples.last().is_none_or(|s| s.budget_spent < self.spent) {
            let s = self.sample_at(self.spent);
            self.samples.push(s);
        }
        let trace = ExtractionTrace {
            strategy,
            seed: self.scoring.seed,
            samples: self.samples,
            exhausted,
        };
        (trace, self.recovered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vocabulary {
        xs.iter().map(|s| Subword::parse(s).unwrap()).collect()
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap(&v(&["a", "b"]), &v(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(overlap(&v(&["a", "b"]), &v(&["c", "d"])).unwrap(), 0.0);
        assert_eq!(overlap(&v(&["a", "b"]), &v(&["b", "c"])).unwrap(), 0.5);
        assert!(matches!(
            overlap(&v(&[]), &v(&["a"])),
            Err(ExtractionError::EmptyVocabulary)
        ));
    }

    #[test]
    fn continuation_variants_are_distinct() {
        assert_eq!(overlap(&v(&["a@@"]), &v(&["a"])).unwrap(), 0.0);
    }

    #[test]
    fn strategy_ids_round_trip() {
        for id in StrategyId::ALL {
            assert_eq!(id.as_str().parse::<StrategyId>().unwrap(), id);
        }
        assert!("nope".parse::<StrategyId>().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(BudgetGrid::powers_of_two(10).unwrap().points(), [1, 2, 4, 8]);
        assert!(BudgetGrid::powers_of_two(0).is_err());
        assert!(BudgetGrid::explicit(vec![1, 1]).is_err());
        assert!(BudgetGrid::explicit(vec![]).is_err());
    }

    #[test]
    fn recorder_samples_state_within_each_point() {
        let grid = BudgetGrid::explicit(vec![1, 2, 4, 8]).unwrap();
        let reference = v(&["a", "b"]);
        let mut r = Recorder::new(Scoring {
            grid: &grid,
            reference: &reference,
            seed: 3,
        });
        r.charge(2);
        r.add(&v(&["a"]));
        r.charge(3);
        r.add(&v(&["b", "x"]));
        let (trace, rec) = r.finish(StrategyId::GrayboxSentences, false);
        let spent: Vec<u64> = trace.samples.iter().map(|s| s.budget_spent).collect();
        assert_eq!(spent, [1, 2, 4, 5]);
        assert_eq!(trace.samples[0].recovered_size, 0);
        assert_eq!(trace.samples[1].recovered_size, 1);
        assert_eq!(trace.samples[2].recovered_size, 1);
        assert_eq!(trace.samples[3].recovered_size, 3);
        assert_eq!(rec.len(), 3);
        assert!((trace.final_overlap() - 0.8).abs() < 1e-12);
        assert_eq!(trace.overlap_at(4), trace.samples[2].overlap);
        assert!(trace.to_csv().starts_with(
            "strategy,seed,budget_spent,recovered_size,overlap\ngraybox-sentences,3,1,0,0.000000\n"
        ));
    }
}
