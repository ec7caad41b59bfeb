//! On-disk victim bundle: `merges.txt`, `vocab.txt`, `lexicon.tsv` and a
//! flat `manifest.txt` of `key=value` lines.

use std::fs;
use std::path::Path;

use super::{AccessMode, EvaluationOnly, Lexicon, VictimError, VictimOracle};
use crate::bpe::{BpeModel, Vocabulary};

pub const MERGES_FILE: &str = "merges.txt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub access_mode: AccessMode,
    pub initial_budget: u64,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        format!(
            "access_mode={}\ninitial_budget={}\n",
            self.access_mode, self.initial_budget
        )
    }

    pub fn parse(text: &str) -> Result<Self, VictimError> {
        let mut mode = None;
        let mut budget = None;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| VictimError::Bundle(format!("manifest line {line:?} is not key=value")))?;
            match key.trim() {
                "access_mode" => mode = Some(value.trim().parse().map_err(VictimError::Bundle)?),
                "initial_budget" => {
                    budget = Some(value.trim().parse().map_err(|_| {
                        VictimError::Bundle(format!("bad initial_budget {value:?}"))
                    })?)
                }
                other => return Err(VictimError::Bundle(format!("unknown manifest key {other:?}"))),
            }
        }
        Ok(Self {
            access_mode: mode.ok_or_else(|| VictimError::Bundle("manifest lacks access_mode".into()))?,
            initial_budget: budget
                .ok_or_else(|| VictimError::Bundle("manifest lacks initial_budget".into()))?,
        })
    }
}

fn write(path: &Path, contents: &str) -> Result<(), VictimError> {
    fs::write(path, contents).map_err(|source| VictimError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, VictimError> {
    fs::read_to_string(path).map_err(|source| VictimError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the oracle's hidden state and its initial budget (not the spent
/// counter) to `dir`.
pub fn save_bundle(oracle: &VictimOracle, dir: &Path) -> Result<(), VictimError> {
    fs::create_dir_all(dir).map_err(|source| VictimError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let (model, lexicon) = oracle.reveal_parts(EvaluationOnly::acknowledge());
    write(&dir.join(MERGES_FILE), &model.save_merges())?;
    write(&dir.join(VOCAB_FILE), &model.vocab().to_file_string())?;
    write(&dir.join(LEXICON_FILE), &lexicon.to_tsv())?;
    let manifest = Manifest {
        access_mode: oracle.access_mode(),
        initial_budget: oracle.initial_budget(),
    };
    write(&dir.join(MANIFEST_FILE), &manifest.to_text())
}

pub fn load_bundle(dir: &Path) -> Result<VictimOracle, VictimError> {
    let model = BpeModel::load_merges(&read(&dir.join(MERGES_FILE))?)?;
    let vocab = Vocabulary::from_file_str(&read(&dir.join(VOCAB_FILE))?)?;
    if &vocab != model.vocab() {
        return Err(VictimError::Bundle(
            "vocabulary file does not match the merge table".into(),
        ));
    }
    let lexicon = Lexicon::from_tsv(&read(&dir.join(LEXICON_FILE))?)?;
    let manifest = Manifest::parse(&read(&dir.join(MANIFEST_FILE))?)?;
    Ok(VictimOracle::new(
        model,
        lexicon,
        manifest.access_mode,
        manifest.initial_budget,
    ))
}
