//! Deterministic BPE: training, encoding, decoding and merge-table I/O.

mod model;
pub mod pretokenize;
mod train;
mod vocab;

pub use model::{BpeModel, CachedEncoder};
pub use train::{train_bpe, MIN_PAIR_FREQUENCY};
pub use vocab::{Decoded, Subword, SubwordSequence, Token, Vocabulary, CONTINUATION};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpeError {
    #[error("corpus is empty after pre-tokenization")]
    EmptyCorpus,
    #[error("target size {target} must exceed the alphabet size {alphabet}")]
    TargetTooSmall { target: usize, alphabet: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate merge `{pair}`")]
    DuplicateMerge { line: usize, pair: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Joins the subwords of `seq` back into text.
pub fn decode(seq: &SubwordSequence) -> Decoded {
    seq.decode()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> BpeModel {
        train_bpe(["ab ab ac"], 4).unwrap()
    }

    fn surface(seq: &SubwordSequence) -> Vec<String> {
        seq.subwords().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_applies_only_at_word_end() {
        let m = toy();
        assert_eq!(surface(&m.encode("ab")), ["ab"]);
        // the learned merge joins a with word-final b; inside "abc" b is not final
        let seq = m.encode("abc");
        assert_eq!(surface(&seq), ["a@@", "b@@", "c"]);
        assert_eq!(
            seq.tokens.iter().map(|t| t.oov).collect::<Vec<_>>(),
            [false, true, false]
        );
    }

    #[test]
    fn encode_empty() {
        assert!(toy().encode("").is_empty());
    }

    #[test]
    fn round_trip_simple() {
        let m = toy();
        assert_eq!(decode(&m.encode("ab ac")).text, "ab ac");
        assert_eq!(decode(&m.encode("  ab\tac. ")).text, "ab ac.");
    }

    #[test]
    fn gray_box_shape() {
        // hand-written merge table producing the Gest@@ ohl@@ ene segmentation
        let merges = "G@@ e@@\nGe@@ s@@\nGes@@ t@@\no@@ h@@\noh@@ l@@\ne@@ n@@\nen@@ e\n";
        let m = BpeModel::load_merges(merges).unwrap();
        assert_eq!(m.encode("Gestohlene").to_string(), "Gest@@ ohl@@ ene");
        assert_eq!(decode(&m.encode("Gestohlene")).text, "Gestohlene");
    }

    #[test]
    fn save_format() {
        let m = toy();
        assert_eq!(
            m.save_merges(),
            "#subword-lab merges v1 target_size=4 alphabet=a@@ b c\na@@ b\n"
        );
        assert_eq!(BpeModel::load_merges(&m.save_merges()).unwrap(), m);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            BpeModel::load_merges("a@@ b c\n"),
            Err(BpeError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            BpeModel::load_merges("#v\na@@ b\na@@ b\n"),
            Err(BpeError::DuplicateMerge { line: 3, .. })
        ));
        assert!(matches!(
            BpeModel::load_merges("ab@@ c\n"),
            Err(BpeError::InvalidModel(_))
        ));
    }

    #[test]
    fn headerless_table_derives_alphabet() {
        let m = BpeModel::load_merges("a@@ b\n").unwrap();
        assert_eq!(m.alphabet().len(), 2);
        assert_eq!(m.target_size(), 3);
    }

    #[test]
    fn truncation_keeps_prefix() {
        let m = train_bpe(["abcd abcd abcd abce"], 30).unwrap();
        let t = m.truncated(1);
        assert_eq!(t.merges(), &m.merges()[..1]);
        assert_eq!(t.vocab().len(), t.alphabet().len() + 1);
    }
}
