//! Simulated victim translator.
//!
//! The oracle translates word by word through a [`Lexicon`], then segments
//! the output with a hidden BPE model. Black-box callers see detokenized
//! text, gray-box callers see the `@@`-marked subwords. Every query is
//! charged the number of output subwords against a fixed budget.

mod bundle;
mod lexicon;

pub use bundle::{load_bundle, save_bundle, Manifest};
pub use lexicon::{context_hash, Entry, Lexicon};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use thiserror::Error;

use crate::bpe::{pretokenize, BpeError, BpeModel, SubwordSequence, Token, Vocabulary};

#[derive(Debug, Error)]
pub enum VictimError {
    #[error("empty query batch")]
    EmptyBatch,
    #[error("budget exhausted at sentence {failed_index}: needs {needed} subwords, {remaining} left")]
    BudgetExhausted {
        /// Results for the sentences before the failing one; these were charged.
        partial: Vec<QueryResult>,
        failed_index: usize,
        needed: u64,
        remaining: u64,
    },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("invalid victim bundle: {0}")]
    Bundle(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bpe(#[from] BpeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessMode {
    /// Only detokenized text is returned.
    BlackBox,
    /// The victim's subword segmentation is returned.
    GrayBox,
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessMode::BlackBox => "black-box",
            AccessMode::GrayBox => "gray-box",
        })
    }
}

impl FromStr for AccessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "black-box" => Ok(AccessMode::BlackBox),
            "gray-box" => Ok(AccessMode::GrayBox),
            other => Err(format!("unknown access mode {other:?}")),
        }
    }
}

/// The victim's detokenized translation of `sentence`: word by word
/// through `lexicon`, copying punctuation and unknown words.
pub fn render(lexicon: &Lexicon, sentence: &str) -> String {
    let mut out = String::with_capacity(sentence.len() + 8);
    let mut previous: Option<&str> = None;
    for chunk in pretokenize::chunks(sentence) {
        if !out.is_empty() {
            out.push(' ');
        }
        for unit in chunk {
            let form = lexicon.choose(unit.text, previous).unwrap_or(unit.text);
            out.push_str(form);
            if unit.is_word() {
                previous = Some(unit.text);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryOutput {
    Text(String),
    Subwords(SubwordSequence),
}

impl QueryOutput {
    /// The detokenized text, whatever the access mode.
    pub fn text(&self) -> String {
        match self {
            QueryOutput::Text(t) => t.clone(),
            QueryOutput::Subwords(s) => s.decode().text,
        }
    }

    pub fn subwords(&self) -> Option<&SubwordSequence> {
        match self {
            QueryOutput::Subwords(s) => Some(s),
            QueryOutput::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub output: QueryOutput,
    /// Output subwords emitted; the budget unit.
    pub subwords_charged: u64,
    /// Pre-tokenized units in the query, for input-side accounting.
    pub source_units: u64,
}

/// Marker passed to [`VictimOracle::reveal_vocabulary`]; constructing one
/// states that the caller is scoring an attack, not running one.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationOnly(());

impl EvaluationOnly {
    pub fn acknowledge() -> Self {
        EvaluationOnly(())
    }
}

#[derive(Default)]
struct Ledger {
    spent: u64,
    source_units: u64,
    cache: [HashMap<String, Vec<Token>>; 2],
}

/// A deterministic translator with a hidden vocabulary and a subword budget.
///
/// Queries are serialized through an internal lock, so concurrent callers
/// observe a linearizable budget.
pub struct VictimOracle {
    model: BpeModel,
    lexicon: Lexicon,
    mode: AccessMode,
    initial_budget: u64,
    ledger: Mutex<Ledger>,
}

impl fmt::Debug for VictimOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VictimOracle")
            .field("mode", &self.mode)
            .field("initial_budget", &self.initial_budget)
            .field("spent", &self.spent())
            .finish_non_exhaustive()
    }
}

impl VictimOracle {
    pub fn new(model: BpeModel, lexicon: Lexicon, mode: AccessMode, budget: u64) -> Self {
        Self {
            model,
            lexicon,
            mode,
            initial_budget: budget,
            ledger: Mutex::new(Ledger::default()),
        }
    }

    /// A fresh oracle with the same hidden state and a full budget.
    pub fn fresh_copy(&self) -> Self {
        Self::new(self.model.clone(), self.lexicon.clone(), self.mode, self.initial_budget)
    }

    /// Same hidden state, different access mode; budget restarts.
    pub fn with_mode(&self, mode: AccessMode) -> Self {
        Self::new(self.model.clone(), self.lexicon.clone(), mode, self.initial_budget)
    }

    /// Same hidden state and mode with a new budget.
    pub fn with_budget(&self, budget: u64) -> Self {
        Self::new(self.model.clone(), self.lexicon.clone(), self.mode, budget)
    }

    pub fn access_mode(&self) -> AccessMode {
        self.mode
    }

    pub fn initial_budget(&self) -> u64 {
        self.initial_budget
    }

    pub fn remaining_budget(&self) -> u64 {
        self.initial_budget - self.spent()
    }

    pub fn spent(&self) -> u64 {
        self.ledger.lock().unwrap().spent
    }

    /// Total input-side units over all charged queries.
    pub fn source_units_seen(&self) -> u64 {
        self.ledger.lock().unwrap().source_units
    }

    /// Ground truth for scoring. Not part of the attack surface.
    pub fn reveal_vocabulary(&self, _: EvaluationOnly) -> &Vocabulary {
        self.model.vocab()
    }

    /// The hidden model and lexicon, for writing a bundle.
    pub fn reveal_parts(&self, _: EvaluationOnly) -> (&BpeModel, &Lexicon) {
        (&self.model, &self.lexicon)
    }

    pub fn translate<S: AsRef<str>>(&self, sentences: &[S]) -> Result<Vec<QueryResult>, VictimError> {
        self.translate_capped(sentences, u64::MAX)
    }

    /// Like [`translate`](Self::translate), but this call may spend at most
    /// `cap` subwords in addition to the oracle's own budget limit.
    pub fn translate_capped<S: AsRef<str>>(
        &self,
        sentences: &[S],
        cap: u64,
    ) -> Result<Vec<QueryResult>, VictimError> {
        if sentences.is_empty() {
            return Err(VictimError::EmptyBatch);
        }
        let mut ledger = self.ledger.lock().unwrap();
        let mut results = Vec::with_capacity(sentences.len());
        let mut call_spent = 0u64;
        for (i, sentence) in sentences.iter().enumerate() {
            let target = render(&self.lexicon, sentence.as_ref());
            let mut tokens = Vec::new();
            let units = pretokenize::units(&target);
            for unit in units {
                let map = &mut ledger.cache[unit.is_final as usize];
                if let Some(seg) = map.get(unit.text) {
                    tokens.extend_from_slice(seg);
                } else {
                    let mut seg = Vec::new();
                    self.model.segment_unit(unit, &mut seg);
                    tokens.extend_from_slice(&seg);
                    map.insert(unit.text.to_string(), seg);
                }
            }
            let cost = tokens.len() as u64;
            let remaining = (self.initial_budget - ledger.spent).min(cap - call_spent);
            if cost > remaining {
                return Err(VictimError::BudgetExhausted {
                    partial: results,
                    failed_index: i,
                    needed: cost,
                    remaining,
                });
            }
            ledger.spent += cost;
            call_spent += cost;
            let source_units = pretokenize::units(sentence.as_ref()).len() as u64;
            ledger.source_units += source_units;
            let output = match self.mode {
                AccessMode::BlackBox => QueryOutput::Text(target),
                AccessMode::GrayBox => QueryOutput::Subwords(SubwordSequence { tokens }),
            };
            results.push(QueryResult {
                output,
                subwords_charged: cost,
                source_units,
            });
        }
        Ok(results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;

    fn toy(mode: AccessMode, budget: u64) -> VictimOracle {
        let model = BpeModel::load_merges("o@@ l@@\nl@@ o\n").unwrap();
        let mut lex = Lexicon::new();
        lex.insert("aba", "ollo").unwrap();
        VictimOracle::new(model, lex, mode, budget)
    }

    #[test]
    fn toy_charge() {
        let o = toy(AccessMode::GrayBox, 100);
        let r = o.translate(&["aba"]).unwrap();
        assert_eq!(r[0].output.subwords().unwrap().to_string(), "ol@@ lo");
        assert_eq!(r[0].subwords_charged, 2);
        assert_eq!(o.remaining_budget(), 98);
    }

    #[test]
    fn fresh_budget_and_exhaustion() {
        let o = toy(AccessMode::GrayBox, 5);
        assert_eq!(o.remaining_budget(), 5);
        let err = o.translate(&["aba", "aba", "aba"]).unwrap_err();
        match err {
            VictimError::BudgetExhausted {
                partial,
                failed_index,
                needed,
                remaining,
            } => {
                assert_eq!(partial.len(), 2);
                assert_eq!((failed_index, needed, remaining), (2, 2, 1));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(o.remaining_budget(), 1);
        assert!(o.translate(&["aba"]).is_err());
        assert_eq!(o.remaining_budget(), 1);
    }

    #[test]
    fn exhausted_to_zero() {
        let o = toy(AccessMode::GrayBox, 4);
        o.translate(&["aba", "aba"]).unwrap();
        assert_eq!(o.remaining_budget(), 0);
    }

    #[test]
    fn empty_batch() {
        let o = toy(AccessMode::BlackBox, 5);
        assert!(matches!(o.translate::<&str>(&[]), Err(VictimError::EmptyBatch)));
    }

    #[test]
    fn copy_through_and_punctuation() {
        let o = toy(AccessMode::BlackBox, 100);
        let r = o.translate(&["aba, xyz aba."]).unwrap();
        assert_eq!(r[0].output, QueryOutput::Text("ollo, xyz ollo.".into()));
    }

    #[test]
    fn cap_limits_a_single_call() {
        let o = toy(AccessMode::GrayBox, 100);
        assert!(o.translate_capped(&["aba"], 1).is_err());
        assert_eq!(o.spent(), 0);
        assert!(o.translate_capped(&["aba"], 2).is_ok());
    }

    #[test]
    fn table_five_gray_box() {
        let mut lex = Lexicon::new();
        for (s, t) in [
            ("Stolen", "Gestohlene"),
            ("Subwords", "Subwörter"),
            ("Importance", "Bedeutung"),
            ("of", "von"),
        ] {
            lex.insert(s, t).unwrap();
        }
        let merges = "G@@ e@@\nGe@@ s@@\nGes@@ t@@\no@@ h@@\noh@@ l@@\ne@@ n@@\nen@@ e\n\
                      S@@ u@@\nSu@@ b@@\nw@@ ö@@\nwö@@ r@@\nt@@ e@@\nte@@ r@@\n\
                      B@@ e@@\nBe@@ d@@\nBed@@ e@@\nBede@@ u@@\nBedeu@@ t@@\nBedeut@@ u@@\nBedeutu@@ n@@\nBedeutun@@ g\n\
                      v@@ o@@\nvo@@ n\n";
        let model = BpeModel::load_merges(merges).unwrap();
        let o = VictimOracle::new(model, lex, AccessMode::GrayBox, 1000);
        let r = o.translate(&["Stolen Subwords: Importance of"]).unwrap();
        assert_eq!(
            r[0].output.subwords().unwrap().to_string(),
            "Gest@@ ohl@@ ene Sub@@ wör@@ ter@@ : Bedeutung von"
        );
        let black = o.with_mode(AccessMode::BlackBox);
        let b = black.translate(&["Stolen Subwords: Importance of"]).unwrap();
        assert_eq!(b[0].output.text(), "Gestohlene Subwörter: Bedeutung von");
        assert_eq!(r[0].output.text(), b[0].output.text());
    }

    #[test]
    fn reveal_is_hidden_model_vocab() {
        let model = train_bpe(["ab ab ac"], 4).unwrap();
        let o = VictimOracle::new(model.clone(), Lexicon::new(), AccessMode::GrayBox, 10);
        assert_eq!(o.reveal_vocabulary(EvaluationOnly::acknowledge()), model.vocab());
    }
}
