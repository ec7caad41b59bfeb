use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Display};
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::ConfigError;
use crate::corpus::{DomainSpec, LanguagePairSpec};
use crate::extraction::{BudgetGrid, StrategyId};
use crate::victim::AccessMode;

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_ENV: &str = "SUBWORD_LAB_OUTPUT";

#[derive(Debug, Clone, PartialEq)]
pub struct VictimSpec {
    pub domain: String,
    pub sentences: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub access: AccessMode,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerSpec {
    pub domain: String,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridSpec {
    PowersOfTwo(u64),
    Explicit(Vec<u64>),
}

impl GridSpec {
    pub fn build(&self) -> Result<BudgetGrid, ConfigError> {
        match self {
            GridSpec::PowersOfTwo(max) => BudgetGrid::powers_of_two(*max),
            GridSpec::Explicit(points) => BudgetGrid::explicit(points.clone()),
        }
        .map_err(|e| ConfigError::invalid(format!("attack.grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicSpec {
    pub k: usize,
    pub patience: usize,
    pub iteration_cap: usize,
    /// Leading attacker sentences used as seeds.
    pub seed_sentences: usize,
}

/// Table of vocabulary efficiency across domains.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySpec {
    /// Empty disables the matrix.
    pub domains: Vec<String>,
    pub sentences: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub language: LanguagePairSpec,
    pub domains: Vec<DomainSpec>,
    pub victim: VictimSpec,
    pub attacker: AttackerSpec,
    pub strategies: Vec<StrategyId>,
    pub seeds: Vec<u64>,
    /// Per-cell spending limit.
    pub budget: u64,
    pub grid: GridSpec,
    pub cyclic: CyclicSpec,
    pub efficiency: EfficiencySpec,
    pub output_dir: PathBuf,
}

fn domain(name: &str, zipf: f64, mix: f64, seed: u64, len: (usize, usize)) -> DomainSpec {
    DomainSpec {
        zipf_exponent: zipf,
        ranking_mix: mix,
        ranking_seed: seed,
        min_len: len.0,
        max_len: len.1,
        ..DomainSpec::new(name)
    }
}

/// Two similar domains (`web`, `forum`) and one with an unrelated word
/// ranking (`patents`), sorted by name.
pub fn default_domains() -> Vec<DomainSpec> {
    vec![
        domain("forum", 1.0, 0.15, 7, (3, 15)),
        domain("patents", 1.1, 1.0, 99, (15, 35)),
        domain("web", 1.0, 0.0, 0, (5, 20)),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            language: LanguagePairSpec::default(),
            domains: default_domains(),
            victim: VictimSpec {
                domain: "web".into(),
                sentences: 200_000,
                seed: 1_000_003,
                vocab_size: 4000,
                access: AccessMode::GrayBox,
                budget: u64::MAX,
            },
            attacker: AttackerSpec {
                domain: "web".into(),
                sentences: 50_000,
            },
            strategies: StrategyId::ALL.to_vec(),
            seeds: vec![1, 2, 3, 4, 5],
            budget: u64::MAX,
            grid: GridSpec::PowersOfTwo(1 << 40),
            cyclic: CyclicSpec {
                k: 20,
                patience: 5,
                iteration_cap: 10_000,
                seed_sentences: 1,
            },
            efficiency: EfficiencySpec {
                domains: vec!["web".into(), "forum".into(), "patents".into()],
                sentences: 10_000,
                seed: 77,
            },
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

fn budget_text(b: u64) -> String {
    if b == u64::MAX {
        "unlimited".into()
    } else {
        b.to_string()
    }
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Key/value pairs with the line each came from; consumed as they are read.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line_no, "expected key = value"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::at(line_no, "empty key"));
            }
            if map.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
                return Err(ConfigError::at(line_no, format!("duplicate key {key}")));
            }
        }
        Ok(Self(map))
    }

    fn take<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T::Err: Display,
    {
        if let Some((line, value)) = self.0.remove(key) {
            *slot = value
                .parse()
                .map_err(|e| ConfigError::at(line, format!("{key}: {e}")))?;
        }
        Ok(())
    }

    fn take_with<T>(
        &mut self,
        key: &str,
        slot: &mut T,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<(), ConfigError> {
        if let Some((line, value)) = self.0.remove(key) {
            *slot = parse(&value).map_err(|e| ConfigError::at(line, format!("{key}: {e}")))?;
        }
        Ok(())
    }
}

fn parse_budget(s: &str) -> Result<u64, String> {
    if s == "unlimited" {
        Ok(u64::MAX)
    } else {
        s.parse().map_err(|e| format!("{e}"))
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e: T::Err| e.to_string()))
        .collect()
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    match s.strip_prefix("powers-of-two:") {
        Some(max) => max.parse().map(GridSpec::PowersOfTwo).map_err(|e| e.to_string()),
        None => parse_list(s).map(GridSpec::Explicit),
    }
}

impl ExperimentConfig {
    /// Parses a config; keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut e = Entries::parse(text)?;
        let mut c = ExperimentConfig::default();

        let l = &mut c.language;
        e.take("language.seed", &mut l.seed)?;
        e.take("language.stems", &mut l.stems)?;
        e.take("language.max_syllables", &mut l.max_syllables)?;
        e.take("language.synonym_rate", &mut l.synonym_rate)?;
        e.take("language.agreement_rate", &mut l.agreement_rate)?;

        // named domains extend or adjust the defaults
        let mut names: BTreeSet<String> = c.domains.iter().map(|d| d.name.clone()).collect();
        names.extend(
            e.0.keys()
                .filter_map(|k| k.strip_prefix("domain."))
                .filter_map(|k| k.split_once('.').map(|(name, _)| name.to_string())),
        );
        let defaults = std::mem::take(&mut c.domains);
        c.domains = names
            .into_iter()
            .map(|name| {
                let mut d = defaults
                    .iter()
                    .find(|d| d.name == name)
                    .cloned()
                    .unwrap_or_else(|| DomainSpec::new(&name));
                let p = |f: &str| format!("domain.{name}.{f}");
                e.take(&p("zipf"), &mut d.zipf_exponent)?;
                e.take(&p("ranking_mix"), &mut d.ranking_mix)?;
                e.take(&p("ranking_seed"), &mut d.ranking_seed)?;
                e.take(&p("min_len"), &mut d.min_len)?;
                e.take(&p("max_len"), &mut d.max_len)?;
                e.take(&p("punctuation"), &mut d.punctuation_rate)?;
                Ok(d)
            })
            .collect::<Result<_, ConfigError>>()?;

        let v = &mut c.victim;
        e.take("victim.domain", &mut v.domain)?;
        e.take("victim.sentences", &mut v.sentences)?;
        e.take("victim.seed", &mut v.seed)?;
        e.take("victim.vocab_size", &mut v.vocab_size)?;
        e.take("victim.access", &mut v.access)?;
        e.take_with("victim.budget", &mut v.budget, parse_budget)?;

        e.take("attacker.domain", &mut c.attacker.domain)?;
        e.take("attacker.sentences", &mut c.attacker.sentences)?;

        e.take_with("attack.strategies", &mut c.strategies, parse_list)?;
        e.take_with("attack.seeds", &mut c.seeds, parse_list)?;
        e.take_with("attack.budget", &mut c.budget, parse_budget)?;
        e.take_with("attack.grid", &mut c.grid, parse_grid)?;

        e.take("cyclic.k", &mut c.cyclic.k)?;
        e.take("cyclic.patience", &mut c.cyclic.patience)?;
        e.take("cyclic.iteration_cap", &mut c.cyclic.iteration_cap)?;
        e.take("cyclic.seed_sentences", &mut c.cyclic.seed_sentences)?;

        e.take_with("efficiency.domains", &mut c.efficiency.domains, parse_list)?;
        e.take("efficiency.sentences", &mut c.efficiency.sentences)?;
        e.take("efficiency.seed", &mut c.efficiency.seed)?;

        e.take("output.dir", &mut c.output_dir)?;

        if let Some((key, (line, _))) = e.0.into_iter().next() {
            return Err(ConfigError::at(line, format!("unknown key {key}")));
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks every cross-reference and range; runs before any query.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::invalid(m));
        let mut names = BTreeSet::new();
        for d in &self.domains {
            if d.name.is_empty() || d.name.contains(['.', ',', ' ', '=']) {
                return bad(format!("bad domain name {:?}", d.name));
            }
            if !names.insert(d.name.as_str()) {
                return bad(format!("domain {} defined twice", d.name));
            }
            d.validate()
                .map_err(|e| ConfigError::invalid(format!("domain.{}: {e}", d.name)))?;
        }
        let known = |n: &str| names.contains(n);
        if !known(&self.victim.domain) {
            return bad(format!("victim.domain: unknown domain {}", self.victim.domain));
        }
        if !known(&self.attacker.domain) {
            return bad(format!("attacker.domain: unknown domain {}", self.attacker.domain));
        }
        if let Some(d) = self.efficiency.domains.iter().find(|d| !known(d)) {
            return bad(format!("efficiency.domains: unknown domain {d}"));
        }
        let l = &self.language;
        if l.stems == 0 || l.max_syllables == 0 {
            return bad("language: stems and max_syllables must be positive".into());
        }
        for (k, r) in [("synonym_rate", l.synonym_rate), ("agreement_rate", l.agreement_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("language.{k} must lie in [0, 1]"));
            }
        }
        if self.victim.sentences == 0 || self.victim.vocab_size == 0 {
            return bad("victim: sentences and vocab_size must be positive".into());
        }
        if self.attacker.sentences == 0 {
            return bad("attacker.sentences must be positive".into());
        }
        if !self.efficiency.domains.is_empty() && self.efficiency.sentences == 0 {
            return bad("efficiency.sentences must be positive".into());
        }
        if self.strategies.is_empty() {
            return bad("attack.strategies is empty".into());
        }
        let mut seen = BTreeSet::new();
        if let Some(s) = self.strategies.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("attack.strategies lists {s} twice"));
        }
        if self.seeds.is_empty() {
            return bad("attack.seeds is empty".into());
        }
        let mut seen = BTreeSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("attack.seeds lists {s} twice"));
        }
        self.grid.build()?;
        if self.victim.access == AccessMode::BlackBox {
            if let Some(s) = self.strategies.iter().find(|s| needs_graybox(**s)) {
                return bad(format!("strategy {s} needs a gray-box victim"));
            }
        }
        let c = &self.cyclic;
        if c.k == 0 || c.patience == 0 || c.seed_sentences == 0 {
            return bad("cyclic: k, patience and seed_sentences must be positive".into());
        }
        if c.seed_sentences > self.attacker.sentences {
            return bad("cyclic.seed_sentences exceeds attacker.sentences".into());
        }
        Ok(())
    }

    /// Canonical rendering: every key, fixed order. Parsing it gives back
    /// an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let l = &self.language;
        kv("language.seed", l.seed.to_string());
        kv("language.stems", l.stems.to_string());
        kv("language.max_syllables", l.max_syllables.to_string());
        kv("language.synonym_rate", l.synonym_rate.to_string());
        kv("language.agreement_rate", l.agreement_rate.to_string());
        let mut domains: Vec<&DomainSpec> = self.domains.iter().collect();
        domains.sort_by(|a, b| a.name.cmp(&b.name));
        for d in domains {
            let p = |f: &str| format!("domain.{}.{f}", d.name);
            kv(&p("zipf"), d.zipf_exponent.to_string());
            kv(&p("ranking_mix"), d.ranking_mix.to_string());
            kv(&p("ranking_seed"), d.ranking_seed.to_string());
            kv(&p("min_len"), d.min_len.to_string());
            kv(&p("max_len"), d.max_len.to_string());
            kv(&p("punctuation"), d.punctuation_rate.to_string());
        }
        let v = &self.victim;
        kv("victim.domain", v.domain.clone());
        kv("victim.sentences", v.sentences.to_string());
        kv("victim.seed", v.seed.to_string());
        kv("victim.vocab_size", v.vocab_size.to_string());
        kv("victim.access", v.access.to_string());
        kv("victim.budget", budget_text(v.budget));
        kv("attacker.domain", self.attacker.domain.clone());
        kv("attacker.sentences", self.attacker.sentences.to_string());
        kv("attack.strategies", join(&self.strategies));
        kv("attack.seeds", join(&self.seeds));
        kv("attack.budget", budget_text(self.budget));
        kv(
            "attack.grid",
            match &self.grid {
                GridSpec::PowersOfTwo(max) => format!("powers-of-two:{max}"),
                GridSpec::Explicit(points) => join(points),
            },
        );
        kv("cyclic.k", self.cyclic.k.to_string());
        kv("cyclic.patience", self.cyclic.patience.to_string());
        kv("cyclic.iteration_cap", self.cyclic.iteration_cap.to_string());
        kv("cyclic.seed_sentences", self.cyclic.seed_sentences.to_string());
        kv("efficiency.domains", join(&self.efficiency.domains));
        kv("efficiency.sentences", self.efficiency.sentences.to_string());
        kv("efficiency.seed", self.efficiency.seed.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        out
    }

    /// Canonical text without the output directory: what identifies a run.
    pub fn identity_text(&self) -> String {
        self.to_text()
            .lines()
            .filter(|l| !l.starts_with("output.dir"))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    /// SHA-256 of [`identity_text`](Self::identity_text).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.identity_text().as_bytes()))
    }

    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        self.domains.iter().find(|d| d.name == name)
    }

    /// Applies [`OUTPUT_ENV`] if it is set.
    pub fn with_env_override(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub(crate) fn needs_graybox(s: StrategyId) -> bool {
    !matches!(s, StrategyId::LocalBpe | StrategyId::LocalBpeOutputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(ExperimentConfig::parse("").unwrap(), c);
    }

    #[test]
    fn overrides_and_comments() {
        let c = ExperimentConfig::parse(
            "# small\nattack.seeds = 3, 4\nattack.grid = 10,20 # explicit\nvictim.budget = 500\n\
             domain.tiny.zipf = 1.5\nvictim.domain = tiny\nattacker.domain = tiny\nefficiency.domains =\n",
        )
        .unwrap();
        assert_eq!(c.seeds, [3, 4]);
        assert_eq!(c.grid, GridSpec::Explicit(vec![10, 20]));
        assert_eq!(c.victim.budget, 500);
        assert_eq!(c.domains.len(), 4);
        assert_eq!(c.domain("tiny").unwrap().zipf_exponent, 1.5);
        assert_eq!(c.domain("web"), ExperimentConfig::default().domain("web"));
        assert!(c.efficiency.domains.is_empty());
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn validation_errors() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err().to_string();
        assert!(err("attack.strategies = graybox-sentences,bogus").contains("unknown strategy"));
        assert!(err("nonsense.key = 1").contains("unknown key"));
        assert!(err("attack.seeds =").contains("empty"));
        assert!(err("attack.grid = 4,2").contains("increase"));
        assert!(err("victim.domain = nowhere").contains("unknown domain"));
        assert!(err("victim.access = black-box").contains("gray-box"));
        assert!(err("line without equals").starts_with("line 1"));
        assert!(err("a = 1\na = 2").contains("duplicate"));
        assert!(err("language.stems = many").contains("language.stems"));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seeds = vec![9];
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
