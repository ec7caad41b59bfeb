//! Vocabulary efficiency, missing-subword diagnostics and correlation.

mod correlation;
mod efficiency;
mod missing;

pub use correlation::{
    correlation, pearson, permutation_p_value, spearman, Correlation, Method, MAX_PERMUTATION_N,
};
pub use efficiency::{efficiency_matrix, efficiency_ratio, subword_count, EfficiencyMatrix};
pub use missing::{missing_subwords, MissingEntry, MissingReport, NEIGHBOR_PREFIX};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("dataset {0:?} has no sentences")]
    EmptyDataset(String),
    #[error("vocabulary sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("no reference model labelled {0:?}")]
    MissingReference(String),
    #[error("inputs differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooShort(usize),
    #[error("constant input: correlation undefined")]
    ConstantInput,
    #[error("exact permutation test supports at most {max} points, got {n}")]
    TooLongForPermutation { n: usize, max: usize },
}
