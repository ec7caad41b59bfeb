use indexmap::IndexMap;

use super::VictimError;

/// Translations of one source word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    /// Used when the word is translated without a preceding word.
    pub citation: String,
    /// Used in running text, picked by a hash of the previous word. Empty
    /// means the citation form is used everywhere.
    pub contextual: Vec<String>,
}

/// Word-level translation table.
///
/// A word on its own translates to its citation form. After another word it
/// translates to one of its contextual forms, chosen by a stable hash of
/// `(word, previous)`, so the same word surfaces differently depending on
/// its neighbour.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: IndexMap<String, Entry>,
}

/// Words have no whitespace; forms are one or more words joined by single
/// spaces.
fn validate(word: &str, form: &str) -> Result<(), VictimError> {
    if word.is_empty() || form.is_empty() {
        return Err(VictimError::InvalidLexicon("empty word or form".into()));
    }
    let bad_form = form
        .split(' ')
        .any(|w| w.is_empty() || w.chars().any(char::is_whitespace));
    if word.chars().any(char::is_whitespace) || bad_form {
        return Err(VictimError::InvalidLexicon(format!(
            "bad whitespace in entry {word:?} -> {form:?}"
        )));
    }
    Ok(())
}

/// The word a multi-word form is looked up by when translating back.
fn head(form: &str) -> &str {
    form.rsplit(' ').next().unwrap_or(form)
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The first form inserted for `word` becomes its citation form; later
    /// ones are appended to the contextual forms unless already listed there.
    pub fn insert(&mut self, word: &str, form: &str) -> Result<(), VictimError> {
        validate(word, form)?;
        match self.entries.get_mut(word) {
            None => {
                self.entries.insert(
                    word.to_string(),
                    Entry {
                        citation: form.to_string(),
                        contextual: Vec::new(),
                    },
                );
            }
            Some(e) => {
                if !e.contextual.iter().any(|f| f == form) {
                    e.contextual.push(form.to_string());
                }
            }
        }
        Ok(())
    }

    pub fn entry(&self, word: &str) -> Option<&Entry> {
        self.entries.get(word)
    }

    /// Citation form first, then the contextual forms not equal to it.
    pub fn forms(&self, word: &str) -> Option<Vec<&str>> {
        let e = self.entries.get(word)?;
        let mut out = vec![e.citation.as_str()];
        out.extend(e.contextual.iter().map(String::as_str).filter(|f| *f != e.citation));
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Entry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The form used for `word` after `previous`; `None` if the word is not
    /// in the lexicon.
    pub fn choose(&self, word: &str, previous: Option<&str>) -> Option<&str> {
        let e = self.entries.get(word)?;
        Some(match previous {
            Some(prev) if !e.contextual.is_empty() => {
                let i = context_hash(word, prev) % e.contextual.len() as u64;
                &e.contextual[i as usize]
            }
            _ => &e.citation,
        })
    }

    /// Reverse-direction lexicon, keyed by the last word of each form. A
    /// target word translates back to its citation owner on its own and to
    /// its other owners in context.
    pub fn inverse(&self) -> Lexicon {
        let mut inv = Lexicon::new();
        for (word, e) in &self.entries {
            inv.insert(head(&e.citation), word).expect("validated on insert");
        }
        for (word, e) in &self.entries {
            for f in &e.contextual {
                inv.insert(head(f), word).expect("validated on insert");
            }
        }
        inv
    }

    /// One entry per line: the source word, the citation form, then the
    /// contextual forms, tab-separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, e) in &self.entries {
            out.push_str(word);
            out.push('\t');
            out.push_str(&e.citation);
            for f in &e.contextual {
                out.push('\t');
                out.push_str(f);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, VictimError> {
        let mut lex = Lexicon::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let word = fields.next().unwrap_or_default();
            let forms: Vec<&str> = fields.collect();
            if forms.is_empty() {
                return Err(VictimError::InvalidLexicon(format!(
                    "line {}: expected a word and at least one form",
                    i + 1
                )));
            }
            if lex.entries.contains_key(word) {
                return Err(VictimError::InvalidLexicon(format!(
                    "line {}: duplicate word {word:?}",
                    i + 1
                )));
            }
            for f in forms {
                lex.insert(word, f)
                    .map_err(|e| VictimError::InvalidLexicon(format!("line {}: {e}", i + 1)))?;
            }
        }
        Ok(lex)
    }
}

/// FNV-1a over `word \0 previous`; stable across platforms and releases.
pub fn context_hash(word: &str, previous: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in word.bytes().chain([0u8]).chain(previous.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn have() -> Lexicon {
        let mut l = Lexicon::new();
        l.insert("have", "habe").unwrap();
        l.insert("have", "habe").unwrap();
        l.insert("have", "haben").unwrap();
        l
    }

    #[test]
    fn citation_form_without_context() {
        assert_eq!(have().choose("have", None), Some("habe"));
        assert_eq!(have().choose("unknown", None), None);
    }

    #[test]
    fn context_picks_forms_deterministically() {
        let l = have();
        let picks: Vec<&str> = ["I", "They", "we", "you", "he"]
            .iter()
            .map(|p| l.choose("have", Some(p)).unwrap())
            .collect();
        assert!(picks.contains(&"habe") && picks.contains(&"haben"));
        assert_eq!(l.choose("have", Some("They")), l.choose("have", Some("They")));
    }

    #[test]
    fn single_form_is_used_everywhere() {
        let mut l = Lexicon::new();
        l.insert("of", "von").unwrap();
        assert_eq!(l.choose("of", Some("x")), Some("von"));
        assert_eq!(l.forms("of").unwrap(), ["von"]);
    }

    #[test]
    fn inflected_in_context() {
        let mut l = Lexicon::new();
        l.insert("red", "rot").unwrap();
        l.insert("red", "rote").unwrap();
        assert_eq!(l.choose("red", None), Some("rot"));
        assert_eq!(l.choose("red", Some("the")), Some("rote"));
        assert_eq!(l.forms("red").unwrap(), ["rot", "rote"]);
    }

    #[test]
    fn fnv_reference_value() {
        // FNV-1a of the empty string is the offset basis; of "\0" one step
        assert_eq!(context_hash("", ""), 0xaf63_bd4c_8601_b7df);
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let l = have();
        assert_eq!(l.to_tsv(), "have\thabe\thabe\thaben\n");
        assert_eq!(Lexicon::from_tsv(&l.to_tsv()).unwrap(), l);
        assert!(Lexicon::from_tsv("lonely\n").is_err());
        assert!(Lexicon::from_tsv("a\tb\na\tc\n").is_err());
        assert!(l.clone().insert("a b", "c").is_err());
        assert!(l.clone().insert("a", "c  d").is_err());
        assert!(l.clone().insert("a", " c").is_err());
        let mut multi = Lexicon::new();
        multi.insert("red", "de rote").unwrap();
        assert_eq!(Lexicon::from_tsv(&multi.to_tsv()).unwrap(), multi);
        assert_eq!(multi.inverse().choose("rote", None), Some("red"));
    }

    #[test]
    fn inverse_lists_citation_owner_first() {
        let mut l = Lexicon::new();
        l.insert("big", "gross").unwrap();
        l.insert("large", "weit").unwrap();
        l.insert("large", "gross").unwrap();
        let inv = l.inverse();
        assert_eq!(inv.choose("gross", None), Some("big"));
        assert_eq!(inv.choose("gross", Some("x")), Some("large"));
        assert_eq!(inv.choose("weit", Some("x")), Some("large"));
    }
}
