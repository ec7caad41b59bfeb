//! Greedy BPE training over a unit-frequency table.
//!
//! Every unit is split into characters; the last character of a word-final
//! unit is the word-final variant of that character. The most frequent
//! adjacent pair is merged until the vocabulary reaches the target size or no
//! pair occurs at least [`MIN_PAIR_FREQUENCY`] times. Equal counts are broken
//! by the lexicographically smallest `(left, right)` surface pair. A pair
//! whose merged symbol is already in the vocabulary is never merged, so each
//! merge adds exactly one new entry.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use super::model::BpeModel;
use super::pretokenize;
use super::vocab::Subword;
use super::BpeError;

pub const MIN_PAIR_FREQUENCY: u64 = 2;

type Pair = (u32, u32);

#[derive(Debug)]
struct Candidate {
    count: u64,
    left: Rc<str>,
    right: Rc<str>,
    pair: Pair,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap: higher count first, then smaller (left, right)
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

struct Word {
    syms: Vec<u32>,
    freq: u64,
}

struct Trainer {
    symbols: Vec<Subword>,
    surfaces: Vec<Rc<str>>,
    ids: HashMap<Subword, u32>,
    words: Vec<Word>,
    counts: HashMap<Pair, u64>,
    locations: HashMap<Pair, HashSet<u32>>,
    heap: BinaryHeap<Candidate>,
    excluded: HashSet<Pair>,
}

impl Trainer {
    fn intern(&mut self, sym: Subword) -> u32 {
        if let Some(&id) = self.ids.get(&sym) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.surfaces.push(Rc::from(sym.to_string()));
        self.ids.insert(sym.clone(), id);
        self.symbols.push(sym);
        id
    }

    fn push_candidate(&mut self, pair: Pair) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count >= MIN_PAIR_FREQUENCY && !self.excluded.contains(&pair) {
            self.heap.push(Candidate {
                count,
                left: self.surfaces[pair.0 as usize].clone(),
                right: self.surfaces[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    fn add_word_pairs(&mut self, idx: u32, touched: &mut HashSet<Pair>) {
        let word = &self.words[idx as usize];
        for w in word.syms.windows(2) {
            let pair = (w[0], w[1]);
            *self.counts.entry(pair).or_insert(0) += word.freq;
            self.locations.entry(pair).or_default().insert(idx);
            touched.insert(pair);
        }
    }

    fn remove_word_pairs(&mut self, idx: u32, touched: &mut HashSet<Pair>) {
        let word = &self.words[idx as usize];
        for w in word.syms.windows(2) {
            let pair = (w[0], w[1]);
            if let Some(c) = self.counts.get_mut(&pair) {
                *c -= word.freq;
                if *c == 0 {
                    self.counts.remove(&pair);
                }
            }
            touched.insert(pair);
        }
    }

    /// Pops the best live candidate whose merge would add a new symbol.
    fn next_merge(&mut self) -> Option<(Pair, Subword)> {
        while let Some(cand) = self.heap.pop() {
            if self.excluded.contains(&cand.pair) {
                continue;
            }
            let live = self.counts.get(&cand.pair).copied().unwrap_or(0);
            if live != cand.count {
                continue;
            }
            let (l, r) = cand.pair;
            let left = &self.symbols[l as usize];
            let right = &self.symbols[r as usize];
            let merged = Subword::new(format!("{}{}", left.text, right.text), right.continues);
            if self.ids.contains_key(&merged) {
                self.excluded.insert(cand.pair);
                continue;
            }
            return Some((cand.pair, merged));
        }
        None
    }

    fn apply(&mut self, pair: Pair, new_id: u32) {
        let Some(locs) = self.locations.remove(&pair) else {
            return;
        };
        let mut locs: Vec<u32> = locs.into_iter().collect();
        locs.sort_unstable();
        let mut touched = HashSet::new();
        for idx in locs {
            let syms = &self.words[idx as usize].syms;
            if !syms.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            self.remove_word_pairs(idx, &mut touched);
            let syms = &self.words[idx as usize].syms;
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(syms[i]);
                    i += 1;
                }
            }
            self.words[idx as usize].syms = merged;
            self.add_word_pairs(idx, &mut touched);
        }
        for p in touched {
            if p != pair {
                self.push_candidate(p);
            }
        }
    }
}

/// Trains a BPE model on the given sentences.
///
/// For a joint model pass both language sides in one iterator.
pub fn train_bpe<'a, I>(sentences: I, target_size: usize) -> Result<BpeModel, BpeError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut freqs: HashMap<(String, bool), u64> = HashMap::new();
    for sentence in sentences {
        for unit in pretokenize::units(sentence) {
            *freqs
                .entry((unit.text.to_string(), unit.is_final))
                .or_insert(0) += 1;
        }
    }
    if freqs.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }
    // sorted so symbol interning and word order are reproducible
    let mut table: Vec<((String, bool), u64)> = freqs.into_iter().collect();
    table.sort_unstable();

    let mut alphabet: Vec<Subword> = table
        .iter()
        .flat_map(|((text, fin), _)| {
            let n = text.chars().count();
            text.chars()
                .enumerate()
                .map(move |(i, c)| Subword::new(c.to_string(), !(*fin && i + 1 == n)))
        })
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    alphabet.sort_by_key(|s| s.to_string());
    if target_size <= alphabet.len() {
        return Err(BpeError::TargetTooSmall {
            target: target_size,
            alphabet: alphabet.len(),
        });
    }

    let mut trainer = Trainer {
        symbols: Vec::new(),
        surfaces: Vec::new(),
        ids: HashMap::new(),
        words: Vec::with_capacity(table.len()),
        counts: HashMap::new(),
        locations: HashMap::new(),
        heap: BinaryHeap::new(),
        excluded: HashSet::new(),
    };
    for sym in &alphabet {
        trainer.intern(sym.clone());
    }
    for ((text, fin), freq) in &table {
        let n = text.chars().count();
        let syms = text
            .chars()
            .enumerate()
            .map(|(i, c)| trainer.ids[&Subword::new(c.to_string(), !(*fin && i + 1 == n))])
            .collect();
        trainer.words.push(Word { syms, freq: *freq });
    }
    let mut touched = HashSet::new();
    for idx in 0..trainer.words.len() as u32 {
        trainer.add_word_pairs(idx, &mut touched);
    }
    let mut initial: Vec<Pair> = touched.into_iter().collect();
    initial.sort_unstable();
    for pair in initial {
        trainer.push_candidate(pair);
    }

    let mut merges = Vec::new();
    while alphabet.len() + merges.len() < target_size {
        let Some((pair, merged)) = trainer.next_merge() else {
            break;
        };
        let left = trainer.symbols[pair.0 as usize].clone();
        let right = trainer.symbols[pair.1 as usize].clone();
        let id = trainer.intern(merged);
        trainer.apply(pair, id);
        merges.push((left, right));
    }

    BpeModel::from_parts(alphabet, merges, target_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_frequent_pair_is_merged() {
        let m = train_bpe(["ab ab ac"], 4).unwrap();
        let alphabet: Vec<String> = m.alphabet().iter().map(|s| s.to_string()).collect();
        assert_eq!(alphabet, ["a@@", "b", "c"]);
        assert_eq!(m.merges(), &[(Subword::cont("a"), Subword::final_("b"))]);
        assert_eq!(m.vocab().len(), 4);
    }

    #[test]
    fn single_character_words_have_no_pairs() {
        let m = train_bpe(["a a a"], 2).unwrap();
        assert!(m.merges().is_empty());
        assert!(m.stopped_early());
    }

    #[test]
    fn pairs_seen_once_are_not_merged() {
        let m = train_bpe(["abc"], 10).unwrap();
        assert!(m.merges().is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        // (x@@, y) and (a@@, b) both occur twice
        let m = train_bpe(["xy ab xy ab"], 6).unwrap();
        assert_eq!(m.merges()[0], (Subword::cont("a"), Subword::final_("b")));
        assert_eq!(m.merges()[1], (Subword::cont("x"), Subword::final_("y")));
    }

    #[test]
    fn errors() {
        assert_eq!(train_bpe(Vec::<&str>::new(), 10), Err(BpeError::EmptyCorpus));
        assert_eq!(train_bpe(["   "], 10), Err(BpeError::EmptyCorpus));
        assert_eq!(
            train_bpe(["ab ab ac"], 3),
            Err(BpeError::TargetTooSmall {
                target: 3,
                alphabet: 3
            })
        );
    }

    #[test]
    fn already_present_merge_results_are_skipped() {
        // "abc" can be reached as (ab, c) and as (a, bc); only one survives
        let corpus = "abc abc abc bcx bcx abx abx";
        let m = train_bpe([corpus], 20).unwrap();
        assert_eq!(m.vocab().len(), m.alphabet().len() + m.merges().len());
    }

    #[test]
    fn deterministic() {
        let text = "the washing machine is broken . I broke the milling machine .";
        let a = train_bpe([text, text], 40).unwrap();
        let b = train_bpe([text, text], 40).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.save_merges(), b.save_merges());
    }
}
