use std::collections::HashMap;

use crate::bpe::{Subword, SubwordSequence, Vocabulary};

/// Shared prefix length (in characters) that makes two entries neighbours.
pub const NEIGHBOR_PREFIX: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingEntry {
    pub subword: Subword,
    /// Characters, without the continuation marker.
    pub length: usize,
    /// Output tokens equal to this subword.
    pub token_frequency: u64,
    /// Occurrences of the subword's string inside output words.
    pub surface_frequency: u64,
    /// Victim entries sharing the first [`NEIGHBOR_PREFIX`] characters.
    pub neighbors: Vec<Subword>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingReport {
    pub victim_size: usize,
    pub common: usize,
    /// Sorted by subword.
    pub entries: Vec<MissingEntry>,
}

fn prefix(text: &str) -> Option<&str> {
    let end = text.char_indices().nth(NEIGHBOR_PREFIX).map_or(text.len(), |(i, _)| i);
    (text.chars().count() >= NEIGHBOR_PREFIX).then(|| &text[..end])
}

/// `victim − recovered`, with diagnostics gathered from gray-box outputs.
pub fn missing_subwords<'a>(
    victim: &Vocabulary,
    recovered: &Vocabulary,
    outputs: impl IntoIterator<Item = &'a SubwordSequence>,
) -> MissingReport {
    let mut missing: Vec<&Subword> = victim.difference(recovered).collect();
    missing.sort();

    let mut by_prefix: HashMap<&str, Vec<&Subword>> = HashMap::new();
    for sw in victim {
        if let Some(p) = prefix(&sw.text) {
            by_prefix.entry(p).or_default().push(sw);
        }
    }

    let mut token_freq: HashMap<&Subword, u64> = missing.iter().map(|&s| (s, 0)).collect();
    let mut words: HashMap<String, u64> = HashMap::new();
    for seq in outputs {
        let mut word = String::new();
        for sw in seq.subwords() {
            if let Some(n) = token_freq.get_mut(sw) {
                *n += 1;
            }
            word.push_str(&sw.text);
            if !sw.continues {
                *words.entry(std::mem::take(&mut word)).or_default() += 1;
            }
        }
        if !word.is_empty() {
            *words.entry(word).or_default() += 1;
        }
    }

    let entries = missing
        .into_iter()
        .map(|sw| {
            let surface_frequency = words
                .iter()
                .map(|(w, n)| n * w.matches(sw.text.as_str()).count() as u64)
                .sum();
            let mut neighbors: Vec<Subword> = prefix(&sw.text)
                .and_then(|p| by_prefix.get(p))
                .into_iter()
                .flatten()
                .filter(|&&n| n != sw)
                .map(|&n| n.clone())
                .collect();
            neighbors.sort();
            MissingEntry {
                subword: sw.clone(),
                length: sw.text.chars().count(),
                token_frequency: token_freq[sw],
                surface_frequency,
                neighbors,
            }
        })
        .collect();
    MissingReport {
        victim_size: victim.len(),
        common: victim.intersection_len(recovered),
        entries,
    }
}

impl MissingReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn missing(&self) -> impl Iterator<Item = &Subword> {
        self.entries.iter().map(|e| &e.subword)
    }

    /// `subword,length,token_frequency,surface_frequency,neighbors`, the
    /// neighbours space-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subword,length,token_frequency,surface_frequency,neighbors\n");
        for e in &self.entries {
            let neighbors: Vec<String> = e.neighbors.iter().map(ToString::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.subword,
                e.length,
                e.token_frequency,
                e.surface_frequency,
                neighbors.join(" ")
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "victim {}  recovered-in-victim {}  missing {}\n",
            self.victim_size,
            self.common,
            self.entries.len()
        );
        let w = self
            .entries
            .iter()
            .map(|e| e.subword.to_string().chars().count())
            .max()
            .unwrap_or(7)
            .max(7);
        out.push_str(&format!("{:<w$}  {:>4}  {:>6}  {:>7}  neighbors\n", "subword", "len", "tokens", "surface"));
        for e in &self.entries {
            let neighbors: Vec<String> = e.neighbors.iter().map(ToString::to_string).collect();
            out.push_str(&format!(
                "{:<w$}  {:>4}  {:>6}  {:>7}  {}\n",
                e.subword.to_string(),
                e.length,
                e.token_frequency,
                e.surface_frequency,
                neighbors.join(" ")
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vocabulary {
        xs.iter().map(|s| Subword::parse(s).unwrap()).collect()
    }

    #[test]
    fn simple_difference() {
        let r = missing_subwords(&v(&["a", "b", "c"]), &v(&["a", "b"]), []);
        assert_eq!(r.missing().collect::<Vec<_>>(), [&Subword::final_("c")]);
        assert_eq!(r.entries.len() + r.common, r.victim_size);
        assert!(missing_subwords(&v(&["a"]), &v(&["a"]), []).is_empty());
    }

    #[test]
    fn neighbours_and_frequencies() {
        let victim = v(&["Bundeslig@@", "Bundesliga", "a", "Bu@@"]);
        let outputs = [SubwordSequence::parse("Bundesliga a"), SubwordSequence::parse("Bu@@ ndesliga")];
        let recovered: Vocabulary = outputs.iter().flat_map(|s| s.subwords().cloned()).collect();
        let r = missing_subwords(&victim, &recovered, &outputs);
        assert_eq!(r.entries.len(), 1);
        let e = &r.entries[0];
        assert_eq!(e.subword, Subword::cont("Bundeslig"));
        assert_eq!(e.length, 9);
        assert_eq!(e.token_frequency, 0);
        assert_eq!(e.surface_frequency, 2);
        assert_eq!(e.neighbors, [Subword::final_("Bundesliga")]);
        assert!(r.to_csv().contains("Bundeslig@@,9,0,2,Bundesliga\n"));
    }
}
