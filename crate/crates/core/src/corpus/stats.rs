use std::collections::{BTreeMap, HashSet};

use super::{Corpus, CorpusError, ParallelCorpus};
use crate::bpe::pretokenize;

/// Line-length and inventory statistics.
///
/// Tokens are pre-tokenizer units compared case-insensitively; characters
/// are compared exactly and exclude whitespace.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub lines: usize,
    pub mean_tokens: f64,
    pub mean_chars: f64,
    pub unique_tokens: usize,
    pub unique_chars: usize,
    /// Keyed by language tag.
    pub per_language: BTreeMap<String, LanguageStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageStats {
    pub unique_tokens: usize,
    pub unique_chars: usize,
}

#[derive(Default)]
struct Acc {
    lines: usize,
    tokens: usize,
    chars: usize,
    token_set: HashSet<String>,
    char_set: HashSet<char>,
}

impl Acc {
    fn add(&mut self, corpus: &Corpus) -> (HashSet<String>, HashSet<char>) {
        let mut toks = HashSet::new();
        let mut chars = HashSet::new();
        for s in corpus.iter() {
            self.lines += 1;
            self.chars += s.chars().count();
            for u in pretokenize::units(s) {
                self.tokens += 1;
                toks.insert(u.text.to_lowercase());
            }
            chars.extend(s.chars().filter(|c| !c.is_whitespace()));
        }
        self.token_set.extend(toks.iter().cloned());
        self.char_set.extend(chars.iter().copied());
        (toks, chars)
    }

    fn finish(self, per_language: BTreeMap<String, LanguageStats>) -> CorpusStats {
        CorpusStats {
            lines: self.lines,
            mean_tokens: self.tokens as f64 / self.lines as f64,
            mean_chars: self.chars as f64 / self.lines as f64,
            unique_tokens: self.token_set.len(),
            unique_chars: self.char_set.len(),
            per_language,
        }
    }
}

fn merge_language(
    map: &mut BTreeMap<String, (HashSet<String>, HashSet<char>)>,
    lang: &str,
    sets: (HashSet<String>, HashSet<char>),
) {
    let e = map.entry(lang.to_string()).or_default();
    e.0.extend(sets.0);
    e.1.extend(sets.1);
}

fn collect(corpora: &[&Corpus]) -> Result<CorpusStats, CorpusError> {
    if corpora.iter().all(|c| c.is_empty()) {
        return Err(CorpusError::Empty);
    }
    let mut acc = Acc::default();
    let mut langs = BTreeMap::new();
    for c in corpora {
        let sets = acc.add(c);
        merge_language(&mut langs, &c.language, sets);
    }
    let per_language = langs
        .into_iter()
        .map(|(k, (t, c))| {
            (
                k,
                LanguageStats {
                    unique_tokens: t.len(),
                    unique_chars: c.len(),
                },
            )
        })
        .collect();
    Ok(acc.finish(per_language))
}

pub fn stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    collect(&[corpus])
}

/// Statistics over both sides; means are over all lines of both sides.
pub fn stats_parallel(corpus: &ParallelCorpus) -> Result<CorpusStats, CorpusError> {
    collect(&[corpus.source(), corpus.target()])
}

impl CorpusStats {
    /// Tidy CSV with columns `metric,language,value`; overall rows use
    /// the language `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,language,value\n");
        out.push_str(&format!("lines,all,{}\n", self.lines));
        out.push_str(&format!("mean_tokens,all,{:.4}\n", self.mean_tokens));
        out.push_str(&format!("mean_chars,all,{:.4}\n", self.mean_chars));
        out.push_str(&format!("unique_tokens,all,{}\n", self.unique_tokens));
        for (lang, s) in &self.per_language {
            out.push_str(&format!("unique_tokens,{lang},{}\n", s.unique_tokens));
        }
        out.push_str(&format!("unique_chars,all,{}\n", self.unique_chars));
        for (lang, s) in &self.per_language {
            out.push_str(&format!("unique_chars,{lang},{}\n", s.unique_chars));
        }
        out
    }
}
