use rayon::prelude::*;

use super::ExperimentError;
use crate::analysis::{efficiency_matrix, EfficiencyMatrix};
use crate::bpe::{train_bpe, BpeModel};
use crate::corpus::{synthesize, Corpus, DomainSpec, LanguagePair};
use crate::victim::{render, AccessMode, EvaluationOnly, VictimOracle};

/// Row label of the union-trained model.
pub const ALL_ROW: &str = "All";
/// Row label of the victim's own model.
pub const VICTIM_ROW: &str = "Victim";

/// A victim together with the data it was trained on.
#[derive(Debug)]
pub struct Victim {
    pub oracle: VictimOracle,
    pub domain: String,
    pub hidden_source: Corpus,
    /// The victim's own renderings of `hidden_source`; its BPE training data.
    pub hidden_target: Corpus,
}

impl Victim {
    /// Trains a victim on `sentences` hidden sentences of `domain`. The BPE
    /// model sees the lexicon's renderings, as a fully converged translator
    /// would produce them.
    pub fn build(
        language: &LanguagePair,
        domain: &DomainSpec,
        sentences: usize,
        seed: u64,
        vocab_size: usize,
        access: AccessMode,
        budget: u64,
    ) -> Result<Self, ExperimentError> {
        let lexicon = language.lexicon();
        let hidden = synthesize(language, domain, sentences, seed)?;
        let rendered: Vec<String> = hidden.source().iter().map(|s| render(&lexicon, s)).collect();
        let hidden_target = Corpus::new(rendered, "L2").with_domain(&domain.name);
        let model = train_bpe(hidden_target.iter(), vocab_size)?;
        Ok(Self {
            oracle: VictimOracle::new(model, lexicon, access, budget),
            domain: domain.name.clone(),
            hidden_source: hidden.source().clone(),
            hidden_target,
        })
    }

    pub fn model(&self) -> &BpeModel {
        self.oracle.reveal_parts(EvaluationOnly::acknowledge()).0
    }

    /// The reverse direction: BPE on the hidden source side, inverted
    /// lexicon, same vocabulary size, mode and budget.
    pub fn backward(&self) -> Result<VictimOracle, ExperimentError> {
        let (model, lexicon) = self.oracle.reveal_parts(EvaluationOnly::acknowledge());
        let back = train_bpe(self.hidden_source.iter(), model.target_size())?;
        Ok(VictimOracle::new(
            back,
            lexicon.inverse(),
            self.oracle.access_mode(),
            self.oracle.initial_budget(),
        ))
    }
}

/// Per-domain models, a union model and optionally the victim, scored on
/// per-domain target-side datasets.
///
/// Datasets are victim-style renderings of `sentences` fresh sentences per
/// domain. For the victim's own domain the dataset is instead the first
/// `sentences` lines of the victim's training data, so the victim model is
/// trained on a superset of it.
pub fn efficiency_suite(
    language: &LanguagePair,
    domains: &[&DomainSpec],
    sentences: usize,
    seed: u64,
    vocab_size: usize,
    victim: Option<&Victim>,
) -> Result<EfficiencyMatrix, ExperimentError> {
    let lexicon = language.lexicon();
    let datasets: Vec<(String, Corpus)> = domains
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let corpus = match victim {
                Some(v) if v.domain == d.name => {
                    if v.hidden_target.len() < sentences {
                        return Err(ExperimentError::Invalid(format!(
                            "victim corpus has fewer than {sentences} sentences"
                        )));
                    }
                    Corpus::new(&v.hidden_target.sentences()[..sentences], "L2")
                }
                _ => {
                    let p = synthesize(language, d, sentences, seed.wrapping_add(i as u64))?;
                    let rendered: Vec<String> = p.source().iter().map(|s| render(&lexicon, s)).collect();
                    Corpus::new(rendered, "L2")
                }
            };
            Ok((d.name.clone(), corpus.with_domain(&d.name)))
        })
        .collect::<Result<_, ExperimentError>>()?;

    let union = Corpus::concat(datasets.iter().map(|(_, c)| c), "L2");
    let trained: Vec<(String, BpeModel)> = datasets
        .par_iter()
        .map(|(name, c)| (name.clone(), c))
        .chain(rayon::iter::once((ALL_ROW.to_string(), &union)))
        .map(|(name, c)| Ok((name, train_bpe(c.iter(), vocab_size)?)))
        .collect::<Result<_, ExperimentError>>()?;
    let mut models: Vec<(String, &BpeModel)> =
        trained.iter().map(|(n, m)| (n.clone(), m)).collect();
    if let Some(v) = victim {
        models.push((VICTIM_ROW.to_string(), v.model()));
    }
    let datasets: Vec<(String, &Corpus)> = datasets.iter().map(|(n, c)| (n.clone(), c)).collect();
    Ok(efficiency_matrix(&models, &datasets)?)
}
