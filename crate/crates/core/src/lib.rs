//! A laboratory for BPE vocabulary extraction.
//!
//! * [`bpe`]: deterministic BPE training, encoding and merge-table I/O.
//! * [`corpus`]: corpus ingestion, statistics, splitting and synthetic
//!   parallel-corpus generation.
//! * [`victim`]: a simulated translator with a hidden BPE model, black-box and
//!   gray-box output modes and a subword budget.
//! * [`extraction`]: vocabulary-recovery strategies and their budget traces.
//! * [`analysis`]: vocabulary efficiency, missing-subword reports and
//!   correlation utilities.
//! * [`experiment`]: config parsing and the reproducible sweep runner.

pub mod bpe;
pub mod corpus;
pub mod victim;
pub mod extraction;
pub mod analysis;
pub mod experiment;
