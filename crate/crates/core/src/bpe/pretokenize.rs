//! Whitespace + edge-punctuation pre-tokenizer.
//!
//! Text is split on Unicode whitespace into chunks. Leading and trailing
//! non-alphanumeric characters of a chunk are detached into one-character
//! units, but they stay glued to the chunk: only the last unit of a chunk is
//! word-final. This is what produces gray-box output such as `kap@@ utt@@ .`
//! for the chunk `kaputt.`.

/// One pre-tokenized unit of text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Unit<'a> {
    pub text: &'a str,
    /// True for the last unit of a whitespace chunk.
    pub is_final: bool,
}

impl<'a> Unit<'a> {
    /// Whether the unit carries a word (at least one alphanumeric char).
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

/// Collapses whitespace runs to single spaces and trims the ends.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for chunk in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(chunk);
    }
    out
}

/// Splits `text` into units.
pub fn units(text: &str) -> Vec<Unit<'_>> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let start = out.len();
        split_chunk(chunk, &mut out);
        if let Some(last) = out[start..].last_mut() {
            last.is_final = true;
        }
    }
    out
}

/// Units grouped by whitespace chunk.
pub fn chunks(text: &str) -> Vec<Vec<Unit<'_>>> {
    text.split_whitespace()
        .map(|chunk| {
            let mut v = Vec::new();
            split_chunk(chunk, &mut v);
            if let Some(last) = v.last_mut() {
                last.is_final = true;
            }
            v
        })
        .collect()
}

fn split_chunk<'a>(chunk: &'a str, out: &mut Vec<Unit<'a>>) {
    let core_start = chunk
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i);
    let Some(core_start) = core_start else {
        // all punctuation
        push_chars(chunk, out);
        return;
    };
    let core_end = chunk
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(chunk.len());
    push_chars(&chunk[..core_start], out);
    out.push(Unit {
        text: &chunk[core_start..core_end],
        is_final: false,
    });
    push_chars(&chunk[core_end..], out);
}

fn push_chars<'a>(s: &'a str, out: &mut Vec<Unit<'a>>) {
    for (i, c) in s.char_indices() {
        out.push(Unit {
            text: &s[i..i + c.len_utf8()],
            is_final: false,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(text: &str) -> Vec<(String, bool)> {
        units(text)
            .into_iter()
            .map(|u| (u.text.to_string(), u.is_final))
            .collect()
    }

    #[test]
    fn detaches_trailing_punctuation_but_keeps_glue() {
        assert_eq!(
            show("ist kaputt."),
            vec![
                ("ist".into(), true),
                ("kaputt".into(), false),
                (".".into(), true)
            ]
        );
    }

    #[test]
    fn leading_and_inner_punctuation() {
        assert_eq!(
            show("(EMMT) www.nachrichten.at"),
            vec![
                ("(".into(), false),
                ("EMMT".into(), false),
                (")".into(), true),
                ("www.nachrichten.at".into(), true),
            ]
        );
    }

    #[test]
    fn punctuation_only_chunk_is_split_per_char() {
        assert_eq!(
            show("..."),
            vec![(".".into(), false), (".".into(), false), (".".into(), true)]
        );
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize("  a \t b\n\nc "), "a b c");
        assert_eq!(normalize(""), "");
        assert!(units("   ").is_empty());
    }
}
