//! Corpora: ingestion, statistics, splitting and synthetic generation.

mod stats;
mod synth;

pub use stats::{stats, stats_parallel, CorpusStats};
pub use synth::{synthesize, DomainSpec, LanguagePair, LanguagePairSpec};

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bpe::pretokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: input is not valid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("corpus is empty")]
    Empty,
    #[error("split sizes {requested} exceed corpus length {available}")]
    SplitTooLarge { requested: usize, available: usize },
    #[error("parallel sides differ in length: {source_len} vs {target_len}")]
    Misaligned { source_len: usize, target_len: usize },
    #[error("degenerate synthesis spec: {0}")]
    Degenerate(String),
}

/// An ordered list of normalized, non-empty sentences in one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<String>,
    pub language: String,
    pub domain: String,
}

impl Corpus {
    /// Normalizes whitespace and drops sentences that end up empty.
    pub fn new<S: AsRef<str>>(
        sentences: impl IntoIterator<Item = S>,
        language: impl Into<String>,
    ) -> Self {
        Self::with_dropped(sentences, language).0
    }

    fn with_dropped<S: AsRef<str>>(
        sentences: impl IntoIterator<Item = S>,
        language: impl Into<String>,
    ) -> (Self, usize) {
        let mut dropped = 0;
        let sentences = sentences
            .into_iter()
            .filter_map(|s| {
                let n = pretokenize::normalize(s.as_ref());
                if n.is_empty() {
                    dropped += 1;
                    None
                } else {
                    Some(n)
                }
            })
            .collect();
        let corpus = Self {
            sentences,
            language: language.into(),
            domain: String::new(),
        };
        (corpus, dropped)
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = domain.into();
        self
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    /// Concatenation of several corpora (e.g. both sides for joint BPE).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Corpus>, language: &str) -> Corpus {
        let sentences = parts
            .into_iter()
            .flat_map(|c| c.sentences.iter().cloned())
            .collect();
        Corpus {
            sentences,
            language: language.to_string(),
            domain: String::new(),
        }
    }

    fn subset(&self, idx: &[usize]) -> Corpus {
        Corpus {
            sentences: idx.iter().map(|&i| self.sentences[i].clone()).collect(),
            language: self.language.clone(),
            domain: self.domain.clone(),
        }
    }
}

/// Result of reading a corpus file.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    /// Lines that were empty after whitespace normalization.
    pub dropped: usize,
}

/// Reads one sentence per line from `reader`.
pub fn ingest_reader<R: Read>(reader: R, language: &str) -> Result<Ingested, CorpusError> {
    let mut lines = Vec::new();
    let mut buf = BufReader::new(reader);
    let mut raw = Vec::new();
    let mut line_no = 0;
    loop {
        raw.clear();
        let n = buf.read_until(b'\n', &mut raw).map_err(|source| CorpusError::Io {
            path: PathBuf::from("<reader>"),
            source,
        })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&raw).map_err(|_| CorpusError::InvalidUtf8 { line: line_no })?;
        lines.push(line.to_string());
    }
    let (corpus, dropped) = Corpus::with_dropped(lines, language);
    Ok(Ingested { corpus, dropped })
}

pub fn ingest(path: impl AsRef<Path>, language: &str) -> Result<Ingested, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, language).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Two line-aligned corpora.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    source: Corpus,
    target: Corpus,
}

impl ParallelCorpus {
    pub fn new(source: Corpus, target: Corpus) -> Result<Self, CorpusError> {
        if source.len() != target.len() {
            return Err(CorpusError::Misaligned {
                source_len: source.len(),
                target_len: target.len(),
            });
        }
        Ok(Self { source, target })
    }

    /// Reads two aligned files. Lines empty on either side are dropped from
    /// both sides so alignment is kept.
    pub fn ingest(
        source: impl AsRef<Path>,
        target: impl AsRef<Path>,
        source_lang: &str,
        target_lang: &str,
    ) -> Result<(Self, usize), CorpusError> {
        let read_raw = |p: &Path| -> Result<Vec<String>, CorpusError> {
            let mut bytes = Vec::new();
            File::open(p)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|source| CorpusError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
            bytes
                .split(|&b| b == b'\n')
                .enumerate()
                .map(|(i, l)| {
                    std::str::from_utf8(l)
                        .map(pretokenize::normalize)
                        .map_err(|_| CorpusError::InvalidUtf8 { line: i + 1 })
                })
                .collect()
        };
        let mut src = read_raw(source.as_ref())?;
        let mut tgt = read_raw(target.as_ref())?;
        // a trailing newline yields one empty final element on each side
        if src.last().is_some_and(String::is_empty) && tgt.last().is_some_and(String::is_empty) {
            src.pop();
            tgt.pop();
        }
        if src.len() != tgt.len() {
            return Err(CorpusError::Misaligned {
                source_len: src.len(),
                target_len: tgt.len(),
            });
        }
        let (mut s, mut t, mut dropped) = (Vec::new(), Vec::new(), 0);
        for (a, b) in src.into_iter().zip(tgt) {
            if a.is_empty() || b.is_empty() {
                dropped += 1;
            } else {
                s.push(a);
                t.push(b);
            }
        }
        Ok((
            Self::new(Corpus::new(s, source_lang), Corpus::new(t, target_lang))?,
            dropped,
        ))
    }

    pub fn source(&self) -> &Corpus {
        &self.source
    }

    pub fn target(&self) -> &Corpus {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Both sides as one corpus, source first.
    pub fn joint(&self) -> Corpus {
        let mut c = Corpus::concat([&self.source, &self.target], "joint");
        c.domain = self.source.domain.clone();
        c
    }

    fn subset(&self, idx: &[usize]) -> ParallelCorpus {
        ParallelCorpus {
            source: self.source.subset(idx),
            target: self.target.subset(idx),
        }
    }

    /// Splits into train/dev/test. With a seed the line order is shuffled
    /// first; otherwise the pieces are consecutive slices.
    pub fn split(
        &self,
        train: usize,
        dev: usize,
        test: usize,
        shuffle_seed: Option<u64>,
    ) -> Result<[ParallelCorpus; 3], CorpusError> {
        let requested = train + dev + test;
        if requested > self.len() {
            return Err(CorpusError::SplitTooLarge {
                requested,
                available: self.len(),
            });
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        if let Some(seed) = shuffle_seed {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let (a, rest) = order.split_at(train);
        let (b, rest) = rest.split_at(dev);
        let c = &rest[..test];
        Ok([self.subset(a), self.subset(b), self.subset(c)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn ingest_two_lines() {
        let got = ingest_reader("hello  world\nsecond line\n".as_bytes(), "en").unwrap();
        assert_eq!(got.corpus.sentences(), ["hello world", "second line"]);
        assert_eq!(got.dropped, 0);
    }

    #[test]
    fn ingest_reports_blank_lines() {
        let got = ingest_reader("one\n   \n".as_bytes(), "en").unwrap();
        assert_eq!(got.corpus.len(), 1);
        assert_eq!(got.dropped, 1);
    }

    #[test]
    fn ingest_file_is_deterministic() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a b\n\nc d").unwrap();
        let a = ingest(f.path(), "en").unwrap();
        let b = ingest(f.path(), "en").unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert!(matches!(
            ingest("/nonexistent/corpus.txt", "en"),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn ingest_rejects_invalid_utf8() {
        let bytes: &[u8] = b"ok\n\xff\xfe\n";
        assert!(matches!(
            ingest_reader(bytes, "en"),
            Err(CorpusError::InvalidUtf8 { line: 2 })
        ));
    }

    fn numbered(n: usize) -> ParallelCorpus {
        let s: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let t: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        ParallelCorpus::new(Corpus::new(s, "L1"), Corpus::new(t, "L2")).unwrap()
    }

    #[test]
    fn split_sizes() {
        let [a, b, c] = numbered(10).split(8, 1, 1, None).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        assert_eq!(b.source().sentences(), ["s8"]);
    }

    #[test]
    fn split_seeded_is_reproducible_and_aligned() {
        let p = numbered(10);
        let x = p.split(5, 3, 2, Some(7)).unwrap();
        let y = p.split(5, 3, 2, Some(7)).unwrap();
        assert_eq!(x, y);
        for piece in &x {
            for (s, t) in piece.source().iter().zip(piece.target().iter()) {
                assert_eq!(s[1..], t[1..]);
            }
        }
    }

    #[test]
    fn split_too_large() {
        assert!(matches!(
            numbered(10).split(8, 2, 2, None),
            Err(CorpusError::SplitTooLarge {
                requested: 12,
                available: 10
            })
        ));
    }

    #[test]
    fn parallel_ingest_keeps_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("src.txt");
        let t = dir.path().join("tgt.txt");
        std::fs::write(&s, "a\n\nc\n").unwrap();
        std::fs::write(&t, "x\ny\nz\n").unwrap();
        let (p, dropped) = ParallelCorpus::ingest(&s, &t, "en", "de").unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(p.target().sentences(), ["x", "z"]);
    }
}
