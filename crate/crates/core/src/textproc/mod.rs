//! Tokenization, stemming, stopword filtering and POS tag counting.

mod porter;
mod pos;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{CoreError, Result};

pub use porter::porter_stem;
pub use pos::{FallbackTagger, PosCounts, PosTag, POS_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopwordMode {
    Remove,
    Keep,
}

impl std::str::FromStr for StopwordMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remove" => Ok(StopwordMode::Remove),
            "keep" => Ok(StopwordMode::Keep),
            other => Err(CoreError::InvalidConfig(format!(
                "stopword mode must be remove|keep, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for StopwordMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopwordMode::Remove => "remove",
            StopwordMode::Keep => "keep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stopword_mode: StopwordMode,
    #[serde(default = "yes")]
    pub stem: bool,
    #[serde(default = "yes")]
    pub lowercase: bool,
}

fn yes() -> bool {
    true
}

impl PipelineConfig {
    pub fn new(stopword_mode: StopwordMode) -> Self {
        PipelineConfig {
            stopword_mode,
            stem: true,
            lowercase: true,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::new(StopwordMode::Remove)
    }
}

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// A set of lowercase surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS).expect("bundled stopword list is valid")
    }
}

impl StopwordList {
    /// One word per line, `#` comments. Entries are lowercased.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.chars().any(char::is_whitespace) {
                return Err(CoreError::MalformedRecord {
                    line: n + 1,
                    message: format!("stopword {line:?} contains whitespace"),
                });
            }
            words.insert(line.to_lowercase());
        }
        if words.is_empty() {
            return Err(CoreError::InvalidConfig("stopword list is empty".into()));
        }
        Ok(StopwordList { words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries in sorted order, one per line.
    pub fn to_text(&self) -> String {
        let mut words: Vec<_> = self.words.iter().map(String::as_str).collect();
        words.sort_unstable();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn is_numeric_token(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
        && token.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
}

/// Whitespace tokenization with leading/trailing punctuation stripped and
/// lowercasing.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, true)
}

pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| if lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

/// tokenize, drop stopwords (when removing), then stem. Order and
/// duplicates are preserved.
pub fn preprocess(text: &str, config: &PipelineConfig, stopwords: &StopwordList) -> Vec<String> {
    tokenize_with(text, config.lowercase)
        .into_iter()
        .filter(|t| {
            config.stopword_mode == StopwordMode::Keep || !stopwords.contains(&t.to_lowercase())
        })
        .map(|t| if config.stem { porter_stem(&t) } else { t })
        .collect()
}

/// POS tag counts for a sentence, from its annotations or, when absent, from
/// the fallback tagger if one is supplied.
pub fn pos_frequencies(sentence: &Sentence, fallback: Option<&FallbackTagger>) -> Result<PosCounts> {
    match (&sentence.pos_tags, fallback) {
        (Some(tags), _) => Ok(PosCounts::from_tags(tags)),
        (None, Some(tagger)) => Ok(PosCounts::from_tags(&tagger.tag_tokens(&tokenize(&sentence.text)))),
        (None, None) => Err(CoreError::PosTagsUnavailable {
            sentence_id: sentence.id.clone(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Role};
    use proptest::prelude::*;

    const TOUR: &str = "There are 210 people on a tour.";

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize(TOUR), strings(&["there", "are", "210", "people", "on", "a", "tour"]));
        assert_eq!(
            tokenize("how many groups will there be?"),
            strings(&["how", "many", "groups", "will", "there", "be"])
        );
        assert_eq!(tokenize(" -- \"Hi,\"  ... 3.5!"), strings(&["hi", "3.5"]));
        assert_eq!(tokenize_with("Sunday.", false), strings(&["Sunday"]));
    }

    #[test]
    fn preprocess_remove_mode() {
        let sw = StopwordList::default();
        let cfg = PipelineConfig::new(StopwordMode::Remove);
        assert_eq!(preprocess(TOUR, &cfg, &sw), strings(&["210", "peopl", "tour"]));
        assert!(preprocess("There are many of them.", &cfg, &sw).is_empty());
    }

    #[test]
    fn preprocess_keep_mode_stems_stopwords_too() {
        let sw = StopwordList::default();
        let cfg = PipelineConfig::new(StopwordMode::Keep);
        // Porter maps "are" to "ar".
        assert_eq!(
            preprocess(TOUR, &cfg, &sw),
            strings(&["there", "ar", "210", "peopl", "on", "a", "tour"])
        );
    }

    #[test]
    fn bundled_list_covers_highlighted_words() {
        let sw = StopwordList::default();
        assert!(sw.len() >= 400);
        for w in ["there", "are", "on", "a", "the", "into", "if", "each", "has", "how", "many", "will", "be"] {
            assert!(sw.contains(w), "{w}");
        }
        for w in ["people", "tour", "groups", "divided", "equal", "tourists"] {
            assert!(!sw.contains(w), "{w}");
        }
    }

    #[test]
    fn stopword_file_validation() {
        assert!(StopwordList::parse("# nothing\n\n").is_err());
        assert!(StopwordList::parse("two words\n").is_err());
        let sw = StopwordList::parse("The # article\nof\n").unwrap();
        assert!(sw.contains("the") && sw.contains("of") && sw.len() == 2);
    }

    #[test]
    fn pos_frequency_paths() {
        let mut s = Sentence {
            id: "s1".into(),
            text: "The group has".into(),
            role: Role::Statement,
            label: Label::Relevant,
            pos_tags: Some(vec![PosTag::Dt, PosTag::Nn, PosTag::Vbz]),
        };
        let c = pos_frequencies(&s, None).unwrap();
        assert_eq!(c.total(), 3);
        assert_eq!(c.get(PosTag::Vbz), 1);
        s.pos_tags = None;
        assert!(matches!(
            pos_frequencies(&s, None),
            Err(CoreError::PosTagsUnavailable { .. })
        ));
        let c = pos_frequencies(&s, Some(&FallbackTagger::default())).unwrap();
        assert_eq!(c.get(PosTag::Dt), 1);
        assert_eq!(c.get(PosTag::Vbz), 1);
        s.text = "...".into();
        assert_eq!(pos_frequencies(&s, Some(&FallbackTagger::default())).unwrap(), PosCounts::zero());
    }

    fn multiset(v: Vec<String>) -> std::collections::BTreeMap<String, usize> {
        let mut m = std::collections::BTreeMap::new();
        for t in v {
            *m.entry(t).or_default() += 1;
        }
        m
    }

    proptest! {
        #[test]
        fn tokens_never_contain_whitespace(text in "\\PC{0,80}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn keep_is_superset_of_remove(words in prop::collection::vec(
            prop_oneof!["[a-z]{1,9}", Just("the".to_string()), Just("are".to_string()), "[0-9]{1,3}"], 0..15)
        ) {
            let sw = StopwordList::default();
            let text = words.join(" ");
            let keep = multiset(preprocess(&text, &PipelineConfig::new(StopwordMode::Keep), &sw));
            let remove = multiset(preprocess(&text, &PipelineConfig::new(StopwordMode::Remove), &sw));
            for (term, n) in remove {
                prop_assert!(keep.get(&term).copied().unwrap_or(0) >= n);
            }
        }
    }
}
