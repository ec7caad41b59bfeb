use std::collections::{HashMap, HashSet};

use super::pretokenize::{self, Unit};
use super::vocab::{Subword, SubwordSequence, Token, Vocabulary};
use super::BpeError;

const HEADER_TAG: &str = "#subword-lab merges v1";

/// A trained (or loaded) BPE model.
///
/// The merge table is ordered by learning order; the vocabulary is the
/// alphabet followed by one new entry per merge.
#[derive(Debug, Clone)]
pub struct BpeModel {
    alphabet: Vec<Subword>,
    merges: Vec<(Subword, Subword)>,
    target_size: usize,
    vocab: Vocabulary,
    ids: HashMap<Subword, u32>,
    ranks: HashMap<(u32, u32), (u32, u32)>,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.merges == other.merges
            && self.target_size == other.target_size
    }
}

impl Eq for BpeModel {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    Known(u32),
    Oov(char, bool),
}

impl BpeModel {
    /// Builds a model from an alphabet of single-character symbols and an
    /// ordered merge list, validating every structural invariant.
    pub fn from_parts(
        alphabet: Vec<Subword>,
        merges: Vec<(Subword, Subword)>,
        target_size: usize,
    ) -> Result<Self, BpeError> {
        let mut ids = HashMap::with_capacity(alphabet.len() + merges.len());
        let mut vocab = Vocabulary::new();
        for sym in &alphabet {
            if sym.text.chars().count() != 1 {
                return Err(BpeError::InvalidModel(format!(
                    "alphabet symbol {sym} is not a single character"
                )));
            }
            if ids.insert(sym.clone(), ids.len() as u32).is_some() {
                return Err(BpeError::InvalidModel(format!(
                    "alphabet symbol {sym} listed twice"
                )));
            }
            vocab.insert(sym.clone());
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let line = rank + 1;
            if !left.continues {
                return Err(BpeError::InvalidModel(format!(
                    "merge {line}: left symbol {left} is word-final"
                )));
            }
            let (Some(&l), Some(&r)) = (ids.get(left), ids.get(right)) else {
                return Err(BpeError::InvalidModel(format!(
                    "merge {line}: operand of `{left} {right}` is neither in the alphabet nor an earlier merge"
                )));
            };
            let merged = Subword::new(format!("{}{}", left.text, right.text), right.continues);
            if ids.contains_key(&merged) {
                return Err(BpeError::DuplicateMerge {
                    line,
                    pair: format!("{left} {right}"),
                });
            }
            let id = ids.len() as u32;
            ids.insert(merged.clone(), id);
            vocab.insert(merged);
            if ranks.insert((l, r), (rank as u32, id)).is_some() {
                return Err(BpeError::DuplicateMerge {
                    line,
                    pair: format!("{left} {right}"),
                });
            }
        }
        if vocab.len() > target_size {
            return Err(BpeError::InvalidModel(format!(
                "vocabulary of {} entries exceeds target size {target_size}",
                vocab.len()
            )));
        }
        Ok(Self {
            alphabet,
            merges,
            target_size,
            vocab,
            ids,
            ranks,
        })
    }

    pub fn alphabet(&self) -> &[Subword] {
        &self.alphabet
    }

    pub fn merges(&self) -> &[(Subword, Subword)] {
        &self.merges
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Training ran out of pairs before reaching the target size.
    pub fn stopped_early(&self) -> bool {
        self.vocab.len() < self.target_size
    }

    /// The same model restricted to its first `k` merges.
    pub fn truncated(&self, k: usize) -> BpeModel {
        let k = k.min(self.merges.len());
        BpeModel::from_parts(
            self.alphabet.clone(),
            self.merges[..k].to_vec(),
            self.target_size,
        )
        .expect("prefix of a valid merge table is valid")
    }

    /// Segments `text` into subwords.
    pub fn encode(&self, text: &str) -> SubwordSequence {
        let mut tokens = Vec::new();
        for unit in pretokenize::units(text) {
            self.segment_unit(unit, &mut tokens);
        }
        SubwordSequence { tokens }
    }

    /// Segments a single pre-tokenized unit, appending to `out`.
    pub fn segment_unit(&self, unit: Unit<'_>, out: &mut Vec<Token>) {
        let n = unit.text.chars().count();
        let mut syms: Vec<Sym> = unit
            .text
            .chars()
            .enumerate()
            .map(|(i, c)| {
                let fin = unit.is_final && i + 1 == n;
                let mut buf = [0u8; 4];
                let key = Subword::new(c.encode_utf8(&mut buf).to_string(), !fin);
                match self.ids.get(&key) {
                    Some(&id) => Sym::Known(id),
                    None => Sym::Oov(c, fin),
                }
            })
            .collect();

        loop {
            let mut best: Option<(u32, u32, u32, u32)> = None;
            for pair in syms.windows(2) {
                if let (Sym::Known(l), Sym::Known(r)) = (pair[0], pair[1]) {
                    if let Some(&(rank, id)) = self.ranks.get(&(l, r)) {
                        if best.is_none_or(|b| rank < b.0) {
                            best = Some((rank, l, r, id));
                        }
                    }
                }
            }
            let Some((_, l, r, id)) = best else { break };
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == Sym::Known(l) && syms[i + 1] == Sym::Known(r) {
                    merged.push(Sym::Known(id));
                    i += 2;
                } else {
                    merged.push(syms[i]);
                    i += 1;
                }
            }
            syms = merged;
        }

        // symbol ids index into the alphabet followed by merge results
        out.extend(syms.into_iter().map(|s| match s {
            Sym::Known(id) => Token {
                subword: self.symbol(id).clone(),
                oov: false,
            },
            Sym::Oov(c, fin) => Token {
                subword: Subword::new(c.to_string(), !fin),
                oov: true,
            },
        }));
    }

    fn symbol(&self, id: u32) -> &Subword {
        self.vocab
            .get_index(id as usize)
            .unwrap_or_else(|| unreachable!("symbol id {id} out of range"))
    }

    /// Serializes the merge table.
    ///
    /// The first line is a `#` comment carrying the target size and the
    /// alphabet; each following line is one merge, `left right`, in learning
    /// order.
    pub fn save_merges(&self) -> String {
        let mut out = format!("{HEADER_TAG} target_size={} alphabet=", self.target_size);
        for (i, sym) in self.alphabet.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&sym.to_string());
        }
        out.push('\n');
        for (l, r) in &self.merges {
            out.push_str(&format!("{l} {r}\n"));
        }
        out
    }

    /// Parses a merge table. Without a header the alphabet is taken to be
    /// the single-character operands and the target size the resulting
    /// vocabulary size.
    pub fn load_merges(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines().enumerate().peekable();
        let mut header_alphabet: Option<Vec<Subword>> = None;
        let mut target_size: Option<usize> = None;
        if let Some((_, first)) = lines.peek() {
            if first.starts_with('#') {
                let (alpha, size) = parse_header(first)?;
                header_alphabet = alpha;
                target_size = size;
                lines.next();
            }
        }
        let mut merges = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
                return Err(BpeError::Malformed {
                    line: line_no,
                    reason: format!("expected two space-separated symbols, got {line:?}"),
                });
            }
            let parse = |f: &str| {
                Subword::parse(f).ok_or_else(|| BpeError::Malformed {
                    line: line_no,
                    reason: format!("invalid symbol {f:?}"),
                })
            };
            let pair = (parse(fields[0])?, parse(fields[1])?);
            if !seen.insert(pair.clone()) {
                return Err(BpeError::DuplicateMerge {
                    line: line_no,
                    pair: line.to_string(),
                });
            }
            merges.push(pair);
        }
        let alphabet = match header_alphabet {
            Some(a) => a,
            None => derive_alphabet(&merges),
        };
        let target_size = target_size.unwrap_or(alphabet.len() + merges.len());
        Self::from_parts(alphabet, merges, target_size)
    }
}

fn parse_header(line: &str) -> Result<(Option<Vec<Subword>>, Option<usize>), BpeError> {
    let malformed = |reason: String| BpeError::Malformed { line: 1, reason };
    let mut size = None;
    if let Some(pos) = line.find("target_size=") {
        let rest = &line[pos + "target_size=".len()..];
        let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
        size = Some(
            digits
                .parse()
                .map_err(|_| malformed(format!("bad target_size in {line:?}")))?,
        );
    }
    let alphabet = match line.find("alphabet=") {
        Some(pos) => {
            let rest = &line[pos + "alphabet=".len()..];
            let syms = rest
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| Subword::parse(s).ok_or_else(|| malformed(format!("bad alphabet symbol {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Some(syms)
        }
        None => None,
    };
    Ok((alphabet, size))
}

fn derive_alphabet(merges: &[(Subword, Subword)]) -> Vec<Subword> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (l, r) in merges {
        for s in [l, r] {
            if s.text.chars().count() == 1 && seen.insert(s.clone()) {
                out.push(s.clone());
            }
        }
    }
    out.sort_by_key(|s| s.to_string());
    out
}

/// Encoder with a per-unit memo, for encoding large corpora.
pub struct CachedEncoder<'m> {
    model: &'m BpeModel,
    cache: [HashMap<String, Vec<Token>>; 2],
}

impl<'m> CachedEncoder<'m> {
    pub fn new(model: &'m BpeModel) -> Self {
        Self {
            model,
            cache: [HashMap::new(), HashMap::new()],
        }
    }

    pub fn model(&self) -> &'m BpeModel {
        self.model
    }

    pub fn encode(&mut self, text: &str) -> SubwordSequence {
        let mut tokens = Vec::new();
        for unit in pretokenize::units(text) {
            tokens.extend_from_slice(self.unit_tokens(unit));
        }
        SubwordSequence { tokens }
    }

    /// Number of subwords in the encoding of `text`.
    pub fn count(&mut self, text: &str) -> usize {
        pretokenize::units(text)
            .into_iter()
            .map(|u| self.unit_tokens(u).len())
            .sum()
    }

    fn unit_tokens(&mut self, unit: Unit<'_>) -> &[Token] {
        let model = self.model;
        let map = &mut self.cache[unit.is_final as usize];
        if !map.contains_key(unit.text) {
            let mut v = Vec::new();
            model.segment_unit(unit, &mut v);
            map.insert(unit.text.to_string(), v);
        }
        &map[unit.text]
    }
}
