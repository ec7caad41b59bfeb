use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;

use super::BpeError;

/// Surface marker carried by non-final subwords.
pub const CONTINUATION: &str = "@@";

/// A subword string plus its position flag.
///
/// `ab` (word-final) and `ab@@` (continues into the next subword) are
/// distinct entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subword {
    pub text: String,
    pub continues: bool,
}

impl Subword {
    pub fn new(text: impl Into<String>, continues: bool) -> Self {
        Self {
            text: text.into(),
            continues,
        }
    }

    pub fn final_(text: impl Into<String>) -> Self {
        Self::new(text, false)
    }

    pub fn cont(text: impl Into<String>) -> Self {
        Self::new(text, true)
    }

    /// Parses the surface form, stripping one trailing `@@`.
    pub fn parse(surface: &str) -> Option<Self> {
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return None;
        }
        match surface.strip_suffix(CONTINUATION) {
            Some(text) if !text.is_empty() => Some(Self::cont(text)),
            _ => Some(Self::final_(surface)),
        }
    }
}

impl fmt::Display for Subword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)?;
        if self.continues {
            f.write_str(CONTINUATION)?;
        }
        Ok(())
    }
}

/// A set of subwords that remembers insertion order.
///
/// Equality is set equality; iteration and file output follow insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: IndexSet<Subword>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the entry was not present yet.
    pub fn insert(&mut self, subword: Subword) -> bool {
        debug_assert!(!subword.text.is_empty());
        self.entries.insert(subword)
    }

    pub fn contains(&self, subword: &Subword) -> bool {
        self.entries.contains(subword)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry at insertion position `i`.
    pub fn get_index(&self, i: usize) -> Option<&Subword> {
        self.entries.get_index(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Subword> {
        self.entries.iter()
    }

    pub fn intersection_len(&self, other: &Vocabulary) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().filter(|s| large.contains(s)).count()
    }

    /// Entries of `self` missing from `other`, in insertion order.
    pub fn difference<'a>(&'a self, other: &'a Vocabulary) -> impl Iterator<Item = &'a Subword> {
        self.iter().filter(move |s| !other.contains(s))
    }

    /// One entry per line, continuation entries with a trailing `@@`.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<Self, BpeError> {
        let mut vocab = Vocabulary::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let entry = Subword::parse(line).ok_or_else(|| BpeError::Malformed {
                line: i + 1,
                reason: format!("invalid vocabulary entry {line:?}"),
            })?;
            if !vocab.insert(entry) {
                return Err(BpeError::Malformed {
                    line: i + 1,
                    reason: format!("duplicate vocabulary entry {line:?}"),
                });
            }
        }
        Ok(vocab)
    }
}

impl FromIterator<Subword> for Vocabulary {
    fn from_iter<T: IntoIterator<Item = Subword>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

impl Extend<Subword> for Vocabulary {
    fn extend<T: IntoIterator<Item = Subword>>(&mut self, iter: T) {
        self.entries.extend(iter)
    }
}

impl<'a> IntoIterator for &'a Vocabulary {
    type Item = &'a Subword;
    type IntoIter = indexmap::set::Iter<'a, Subword>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// An encoded subword together with its out-of-vocabulary flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub subword: Subword,
    /// Single character the model never saw in this position.
    pub oov: bool,
}

/// Ordered subword tokens, as emitted by a gray-box translator.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubwordSequence {
    pub tokens: Vec<Token>,
}

/// Result of joining subwords back into text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub text: String,
    /// The last token was a continuation token; it was emitted as-is.
    pub dangling: bool,
}

impl SubwordSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn subwords(&self) -> impl Iterator<Item = &Subword> {
        self.tokens.iter().map(|t| &t.subword)
    }

    /// Parses the space-separated `@@` surface format. Tokens are not
    /// flagged out-of-vocabulary since the surface carries no such flag.
    pub fn parse(surface: &str) -> Self {
        let tokens = surface
            .split_whitespace()
            .filter_map(Subword::parse)
            .map(|subword| Token {
                subword,
                oov: false,
            })
            .collect();
        Self { tokens }
    }

    /// Concatenates runs of continuation tokens up to the next final token
    /// and joins the resulting words with single spaces.
    pub fn decode(&self) -> Decoded {
        let mut text = String::new();
        let mut open = false;
        for token in &self.tokens {
            if !open && !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&token.subword.text);
            open = token.subword.continues;
        }
        Decoded {
            text,
            dangling: open,
        }
    }
}

impl fmt::Display for SubwordSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", token.subword)?;
        }
        Ok(())
    }
}

impl FromStr for SubwordSequence {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::parse(s))
    }
}
