//! Synthetic parallel corpora with controllable domain shift.
//!
//! A [`LanguagePair`] fixes the word inventory: source words are
//! `stem + suffix`, target words are the stem under an invertible character
//! substitution followed by a target suffix. Some target words have an
//! agreement variant (extra suffix) or a synonym form borrowed from a linked
//! stem. A [`DomainSpec`] fixes how often each stem is used: Zipfian
//! frequencies over a domain-specific ranking of the stems, plus a sentence
//! length range.

use std::collections::{HashMap, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusError, ParallelCorpus};
use crate::victim::{Entry, Lexicon};

const SOURCE_LETTERS: &str = "abcdefghijklmnopqrstuvwxyz";
const TARGET_LETTERS: &str = "aäbdefghijklmnoöprstuüvwzß";
const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br",
    "st", "tr", "pl", "gr", "sh", "ch", "qu", "x", "y",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou", "io"];
const CODAS: &[&str] = &["", "", "", "n", "r", "s", "l", "t", "m", "ck", "nd"];

/// Parameters for generating a [`LanguagePair`].
#[derive(Debug, Clone, PartialEq)]
pub struct LanguagePairSpec {
    pub seed: u64,
    pub stems: usize,
    pub max_syllables: usize,
    /// Fraction of stems whose words also translate to a linked stem.
    pub synonym_rate: f64,
    /// Fraction of stems whose target words, in running text, take an
    /// agreement suffix and a preceding particle.
    pub agreement_rate: f64,
    pub source_suffixes: Vec<String>,
    pub target_suffixes: Vec<String>,
    pub agreement_suffixes: Vec<String>,
    /// Target-only function words, paired with the agreement suffixes.
    pub particles: Vec<String>,
}

impl Default for LanguagePairSpec {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            seed: 1,
            stems: 6000,
            max_syllables: 3,
            synonym_rate: 0.3,
            agreement_rate: 0.1,
            source_suffixes: v(&["", "s", "ed", "ing", "er", "ly", "ness", "able"]),
            target_suffixes: v(&["", "", "te", "ung", "er", "lich", "heit", "bar"]),
            agreement_suffixes: v(&["e", "n", "s"]),
            particles: v(&["de", "ta", "ün"]),
        }
    }
}

/// A synthetic source/target language pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguagePair {
    stems: Vec<String>,
    source_suffixes: Vec<String>,
    target_suffixes: Vec<String>,
    agreement_suffixes: Vec<String>,
    particles: Vec<String>,
    synonyms: Vec<Option<usize>>,
    agreeing: Vec<bool>,
    forward: HashMap<char, char>,
    backward: HashMap<char, char>,
}

impl LanguagePair {
    /// Builds a pair from explicit inventories. `synonyms[i]`, if set, links
    /// stem `i` to another stem whose translation is an alternative form;
    /// `agreeing[i]` makes stem `i` inflect in running text.
    #[allow(clippy::too_many_arguments)]
    pub fn from_inventories(
        stems: Vec<String>,
        source_suffixes: Vec<String>,
        target_suffixes: Vec<String>,
        agreement_suffixes: Vec<String>,
        particles: Vec<String>,
        synonyms: Vec<Option<usize>>,
        agreeing: Vec<bool>,
        substitution_seed: u64,
    ) -> Result<Self, CorpusError> {
        if stems.is_empty() || stems.iter().any(String::is_empty) {
            return Err(CorpusError::Degenerate("stem inventory is empty".into()));
        }
        if source_suffixes.is_empty() {
            return Err(CorpusError::Degenerate("suffix inventory is empty".into()));
        }
        if source_suffixes.len() != target_suffixes.len() {
            return Err(CorpusError::Degenerate(
                "source and target suffix inventories differ in size".into(),
            ));
        }
        if synonyms.len() != stems.len() || synonyms.iter().flatten().any(|&j| j >= stems.len()) {
            return Err(CorpusError::Degenerate("synonym links do not match stems".into()));
        }
        if agreeing.len() != stems.len() {
            return Err(CorpusError::Degenerate("agreement flags do not match stems".into()));
        }
        if agreeing.iter().any(|&a| a) && agreement_suffixes.is_empty() {
            return Err(CorpusError::Degenerate("agreeing stems need agreement suffixes".into()));
        }
        if !particles.is_empty() && particles.len() != agreement_suffixes.len() {
            return Err(CorpusError::Degenerate(
                "particles must pair with agreement suffixes".into(),
            ));
        }
        let all = source_suffixes
            .iter()
            .chain(&target_suffixes)
            .chain(&agreement_suffixes)
            .chain(&particles)
            .chain(&stems);
        for s in all {
            if s.chars().any(|c| !c.is_alphanumeric()) {
                return Err(CorpusError::Degenerate(format!(
                    "inventory item {s:?} is not alphanumeric"
                )));
            }
        }
        let mut targets: Vec<char> = TARGET_LETTERS.chars().collect();
        targets.shuffle(&mut ChaCha8Rng::seed_from_u64(substitution_seed));
        let forward: HashMap<char, char> = SOURCE_LETTERS.chars().zip(targets).collect();
        let backward = forward.iter().map(|(&a, &b)| (b, a)).collect();
        Ok(Self {
            stems,
            source_suffixes,
            target_suffixes,
            agreement_suffixes,
            particles,
            synonyms,
            agreeing,
            forward,
            backward,
        })
    }

    pub fn generate(spec: &LanguagePairSpec) -> Result<Self, CorpusError> {
        if spec.stems == 0 || spec.max_syllables == 0 {
            return Err(CorpusError::Degenerate("no stems requested".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut seen = HashSet::new();
        let mut stems = Vec::with_capacity(spec.stems);
        let mut attempts = 0usize;
        while stems.len() < spec.stems {
            attempts += 1;
            if attempts > spec.stems * 200 {
                return Err(CorpusError::Degenerate(format!(
                    "cannot generate {} distinct stems",
                    spec.stems
                )));
            }
            let syllables = rng.gen_range(1..=spec.max_syllables);
            let mut stem = String::new();
            for _ in 0..syllables {
                stem.push_str(ONSETS.choose(&mut rng).unwrap());
                stem.push_str(VOWELS.choose(&mut rng).unwrap());
                stem.push_str(CODAS.choose(&mut rng).unwrap());
            }
            if seen.insert(stem.clone()) {
                stems.push(stem);
            }
        }
        let n = stems.len();
        let synonyms = (0..n)
            .map(|i| {
                if n > 1 && rng.gen_bool(spec.synonym_rate.clamp(0.0, 1.0)) {
                    let j = rng.gen_range(0..n - 1);
                    Some(if j >= i { j + 1 } else { j })
                } else {
                    None
                }
            })
            .collect();
        let agree_p = if spec.agreement_suffixes.is_empty() {
            0.0
        } else {
            spec.agreement_rate.clamp(0.0, 1.0)
        };
        let agreeing = (0..n).map(|_| rng.gen_bool(agree_p)).collect();
        Self::from_inventories(
            stems,
            spec.source_suffixes.clone(),
            spec.target_suffixes.clone(),
            spec.agreement_suffixes.clone(),
            spec.particles.clone(),
            synonyms,
            agreeing,
            spec.seed ^ 0x5eed,
        )
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn suffix_count(&self) -> usize {
        self.source_suffixes.len()
    }

    pub fn source_word(&self, stem: usize, suffix: usize) -> String {
        format!("{}{}", self.stems[stem], self.source_suffixes[suffix])
    }

    /// The stem under the character substitution.
    pub fn target_stem(&self, stem: usize) -> String {
        self.substitute(&self.stems[stem])
    }

    pub fn substitute(&self, text: &str) -> String {
        text.chars()
            .map(|c| self.forward.get(&c).copied().unwrap_or(c))
            .collect()
    }

    /// Inverse of [`substitute`](Self::substitute) for substituted text.
    pub fn unsubstitute(&self, text: &str) -> String {
        text.chars()
            .map(|c| self.backward.get(&c).copied().unwrap_or(c))
            .collect()
    }

    /// Translations of `stem + suffix`: the plain target word as citation
    /// form; in running text the particle plus agreement variant for
    /// agreeing stems, and the linked stem's word as an alternative.
    pub fn forms(&self, stem: usize, suffix: usize) -> Entry {
        let base = format!("{}{}", self.target_stem(stem), self.target_suffixes[suffix]);
        let mut contextual = Vec::new();
        if self.agreeing[stem] {
            let k = (stem * 31 + suffix * 7) % self.agreement_suffixes.len();
            let inflected = format!("{base}{}", self.agreement_suffixes[k]);
            contextual.push(match self.particles.get(k) {
                Some(p) => format!("{p} {inflected}"),
                None => inflected,
            });
        }
        if let Some(link) = self.synonyms[stem] {
            let syn = format!("{}{}", self.target_stem(link), self.target_suffixes[suffix]);
            if contextual.is_empty() {
                contextual.push(base.clone());
            }
            if !contextual.contains(&syn) {
                contextual.push(syn);
            }
        }
        Entry {
            citation: base,
            contextual,
        }
    }

    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::new();
        for stem in 0..self.stems.len() {
            for suffix in 0..self.source_suffixes.len() {
                let word = self.source_word(stem, suffix);
                let e = self.forms(stem, suffix);
                for f in std::iter::once(&e.citation).chain(&e.contextual) {
                    lex.insert(&word, f).expect("inventories are alphanumeric");
                }
            }
        }
        lex
    }
}

/// Frequency profile of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub name: String,
    pub zipf_exponent: f64,
    /// 0 keeps the language's canonical stem ranking, 1 uses a fully
    /// independent random ranking.
    pub ranking_mix: f64,
    pub ranking_seed: u64,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a sentence ends with a glued full stop.
    pub punctuation_rate: f64,
}

impl DomainSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            zipf_exponent: 1.0,
            ranking_mix: 0.0,
            ranking_seed: 0,
            min_len: 5,
            max_len: 20,
            punctuation_rate: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(CorpusError::Degenerate(format!(
                "sentence length range {}..={}",
                self.min_len, self.max_len
            )));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return Err(CorpusError::Degenerate("zipf exponent must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.ranking_mix) || !(0.0..=1.0).contains(&self.punctuation_rate)
        {
            return Err(CorpusError::Degenerate("rates must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Stem indices ordered from most to least frequent in this domain.
    fn ranking(&self, stems: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.ranking_seed);
        let mut keyed: Vec<(f64, usize)> = (0..stems)
            .map(|i| {
                let canonical = i as f64 / stems as f64;
                let u: f64 = rng.gen();
                ((1.0 - self.ranking_mix) * canonical + self.ranking_mix * u, i)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, i)| i).collect()
    }
}

/// Generates `sentences` aligned sentence pairs. A pure function of its
/// arguments.
pub fn synthesize(
    language: &LanguagePair,
    domain: &DomainSpec,
    sentences: usize,
    seed: u64,
) -> Result<ParallelCorpus, CorpusError> {
    domain.validate()?;
    let ranking = domain.ranking(language.stems.len());
    let zipf = WeightedIndex::new(
        (1..=ranking.len()).map(|r| (r as f64).powf(-domain.zipf_exponent)),
    )
    .map_err(|e| CorpusError::Degenerate(e.to_string()))?;
    let suffixes = WeightedIndex::new((1..=language.suffix_count()).map(|r| 1.0 / r as f64))
        .map_err(|e| CorpusError::Degenerate(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut src = Vec::with_capacity(sentences);
    let mut tgt = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let len = rng.gen_range(domain.min_len..=domain.max_len);
        let mut s = Vec::with_capacity(len);
        let mut t = Vec::with_capacity(len);
        for pos in 0..len {
            let stem = ranking[zipf.sample(&mut rng)];
            let suffix = suffixes.sample(&mut rng);
            s.push(language.source_word(stem, suffix));
            let entry = language.forms(stem, suffix);
            // translators pick freely among the forms that fit the context
            let form = match entry.contextual.choose(&mut rng) {
                Some(f) if pos > 0 => f.clone(),
                _ => entry.citation,
            };
            t.push(form);
        }
        if rng.gen_bool(domain.punctuation_rate) {
            s.last_mut().unwrap().push('.');
            t.last_mut().unwrap().push('.');
        }
        src.push(s.join(" "));
        tgt.push(t.join(" "));
    }
    ParallelCorpus::new(
        Corpus::new(src, "L1").with_domain(&domain.name),
        Corpus::new(tgt, "L2").with_domain(&domain.name),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_language() -> LanguagePair {
        LanguagePair::generate(&LanguagePairSpec {
            stems: 200,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn deterministic() {
        let lang = small_language();
        let d = DomainSpec::new("web");
        assert_eq!(
            synthesize(&lang, &d, 50, 3).unwrap(),
            synthesize(&lang, &d, 50, 3).unwrap()
        );
        assert_ne!(
            synthesize(&lang, &d, 50, 3).unwrap(),
            synthesize(&lang, &d, 50, 4).unwrap()
        );
        assert_eq!(small_language(), lang);
    }

    #[test]
    fn substitution_is_invertible() {
        let lang = small_language();
        for stem in lang.stems() {
            let t = lang.substitute(stem);
            assert_ne!(&t, stem);
            assert_eq!(&lang.unsubstitute(&t), stem);
        }
    }

    #[test]
    fn target_side_uses_lexicon_forms() {
        let lang = small_language();
        let lex = lang.lexicon();
        let p = synthesize(&lang, &DomainSpec::new("web"), 20, 1).unwrap();
        for (s, t) in p.source().iter().zip(p.target().iter()) {
            let mut rest: &str = t;
            for (i, a) in s.split(' ').enumerate() {
                let punct = a.len() - a.trim_end_matches('.').len();
                let a = a.trim_end_matches('.');
                let forms = lex.forms(a).unwrap();
                let used = forms
                    .iter()
                    .copied()
                    .filter(|f| rest.starts_with(f))
                    .max_by_key(|f| f.len())
                    .unwrap_or_else(|| panic!("{a} not rendered in {t:?}"));
                if i == 0 {
                    assert_eq!(forms[0], used);
                }
                rest = rest[used.len() + punct..].trim_start_matches(' ');
            }
            assert!(rest.is_empty());
        }
    }

    #[test]
    fn one_stem_one_suffix() {
        let lang = LanguagePair::from_inventories(
            vec!["ka".into()],
            vec!["".into()],
            vec!["".into()],
            vec![],
            vec![],
            vec![None],
            vec![false],
            0,
        )
        .unwrap();
        let mut d = DomainSpec::new("tiny");
        d.punctuation_rate = 0.0;
        let p = synthesize(&lang, &d, 30, 9).unwrap();
        let words: HashSet<&str> = p.source().iter().flat_map(|s| s.split(' ')).collect();
        assert_eq!(words.len(), 1);
        assert_eq!(lang.lexicon().len(), 1);
    }

    #[test]
    fn degenerate_specs() {
        let err = LanguagePair::from_inventories(vec![], vec!["".into()], vec!["".into()], vec![], vec![], vec![], vec![], 0);
        assert!(matches!(err, Err(CorpusError::Degenerate(_))));
        let err = LanguagePair::from_inventories(vec!["a".into()], vec![], vec![], vec![], vec![], vec![None], vec![false], 0);
        assert!(matches!(err, Err(CorpusError::Degenerate(_))));
        let mut d = DomainSpec::new("x");
        d.min_len = 0;
        assert!(synthesize(&small_language(), &d, 1, 0).is_err());
    }

    #[test]
    fn ranking_mix_controls_overlap_of_frequent_stems() {
        let n = 1000;
        let top = |mix: f64, seed: u64| -> HashSet<usize> {
            let mut d = DomainSpec::new("d");
            d.ranking_mix = mix;
            d.ranking_seed = seed;
            d.ranking(n).into_iter().take(100).collect()
        };
        let similar = top(0.1, 1).intersection(&top(0.1, 2)).count();
        let skewed = top(0.1, 1).intersection(&top(1.0, 3)).count();
        assert!(similar > 60, "{similar}");
        assert!(skewed < 30, "{skewed}");
    }
}
