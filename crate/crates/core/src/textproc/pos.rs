use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};

macro_rules! pos_tags {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Penn Treebank word-level part-of-speech tags.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum PosTag {
            $($variant),+
        }

        impl PosTag {
            pub const ALL: [PosTag; POS_DIM] = [$(PosTag::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(PosTag::$variant => $name),+
                }
            }
        }

        impl FromStr for PosTag {
            type Err = CoreError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(PosTag::$variant),)+
                    other => Err(CoreError::UnknownPosTag(other.to_string())),
                }
            }
        }
    };
}

/// Number of POS tags, and therefore of POS feature dimensions.
pub const POS_DIM: usize = 36;

pos_tags! {
    Cc => "CC", Cd => "CD", Dt => "DT", Ex => "EX", Fw => "FW", In => "IN",
    Jj => "JJ", Jjr => "JJR", Jjs => "JJS", Ls => "LS", Md => "MD", Nn => "NN",
    Nns => "NNS", Nnp => "NNP", Nnps => "NNPS", Pdt => "PDT", Pos => "POS",
    Prp => "PRP", PrpS => "PRP$", Rb => "RB", Rbr => "RBR", Rbs => "RBS",
    Rp => "RP", Sym => "SYM", To => "TO", Uh => "UH", Vb => "VB", Vbd => "VBD",
    Vbg => "VBG", Vbn => "VBN", Vbp => "VBP", Vbz => "VBZ", Wdt => "WDT",
    Wp => "WP", WpS => "WP$", Wrb => "WRB",
}

impl PosTag {
    /// Position of this tag in the POS feature block.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PosTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PosTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-tag counts for one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosCounts(pub [u32; POS_DIM]);

impl PosCounts {
    pub fn zero() -> Self {
        PosCounts([0; POS_DIM])
    }

    pub fn from_tags(tags: &[PosTag]) -> Self {
        let mut counts = [0u32; POS_DIM];
        for tag in tags {
            counts[tag.index()] += 1;
        }
        PosCounts(counts)
    }

    pub fn get(&self, tag: PosTag) -> u32 {
        self.0[tag.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

const DEFAULT_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");

/// Lexicon-plus-suffix tagger for text without POS annotations.
///
/// Closed-class words come from a lexicon; everything else goes through a
/// handful of suffix rules with `NN` as the default. Accuracy is far below a
/// statistical tagger.
#[derive(Debug, Clone)]
pub struct FallbackTagger {
    lexicon: HashMap<String, PosTag>,
}

impl Default for FallbackTagger {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

impl FallbackTagger {
    /// Parses `word<TAB>TAG` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| CoreError::MalformedRecord {
                line: n + 1,
                message: "expected word<TAB>TAG".into(),
            })?;
            lexicon.insert(word.trim().to_lowercase(), tag.trim().parse()?);
        }
        Ok(FallbackTagger { lexicon })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn tag_token(&self, token: &str) -> PosTag {
        let lower = token.to_lowercase();
        if let Some(tag) = self.lexicon.get(&lower) {
            return *tag;
        }
        if super::is_numeric_token(&lower) {
            return PosTag::Cd;
        }
        if lower.len() > 3 && lower.ends_with("ly") {
            PosTag::Rb
        } else if lower.len() > 4 && lower.ends_with("ing") {
            PosTag::Vbg
        } else if lower.len() > 3 && lower.ends_with("ed") {
            PosTag::Vbd
        } else if lower.len() > 2 && lower.ends_with('s') && !lower.ends_with("ss") {
            PosTag::Nns
        } else {
            PosTag::Nn
        }
    }

    pub fn tag_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tag_token(t.as_ref())).collect()
    }

    /// Lexicon entries sorted by word, in the format accepted by `parse`.
    pub fn to_text(&self) -> String {
        let mut entries: Vec<_> = self.lexicon.iter().collect();
        entries.sort_unstable();
        entries.iter().map(|(w, t)| format!("{w}\t{t}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_six_distinct_tags() {
        let mut names: Vec<_> = PosTag::ALL.iter().map(|t| t.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 36);
        for (i, tag) in PosTag::ALL.iter().enumerate() {
            assert_eq!(tag.index(), i);
            assert_eq!(tag.as_str().parse::<PosTag>().unwrap(), *tag);
        }
    }

    #[test]
    fn unknown_tag_rejected() {
        assert!(matches!("NNPN".parse::<PosTag>(), Err(CoreError::UnknownPosTag(_))));
        assert!("WRP".parse::<PosTag>().is_err());
    }

    #[test]
    fn counts_with_multiplicity() {
        let c = PosCounts::from_tags(&[PosTag::Dt, PosTag::Nn, PosTag::Vbz]);
        assert_eq!(c.get(PosTag::Dt), 1);
        assert_eq!(c.get(PosTag::Nn), 1);
        assert_eq!(c.get(PosTag::Vbz), 1);
        assert_eq!(c.total(), 3);
        let c = PosCounts::from_tags(&[PosTag::Nn, PosTag::Nn, PosTag::Nn]);
        assert_eq!(c.get(PosTag::Nn), 3);
        assert_eq!(PosCounts::from_tags(&[]), PosCounts::zero());
    }

    #[test]
    fn fallback_rules() {
        let t = FallbackTagger::default();
        let tags = t.tag_tokens(&["how", "many", "groups", "will", "there", "be", "7", "quickly", "running", "divided", "tour"]);
        assert_eq!(
            tags,
            vec![
                PosTag::Wrb,
                PosTag::Jj,
                PosTag::Nns,
                PosTag::Md,
                PosTag::Ex,
                PosTag::Vb,
                PosTag::Cd,
                PosTag::Rb,
                PosTag::Vbg,
                PosTag::Vbd,
                PosTag::Nn
            ]
        );
    }

    #[test]
    fn lexicon_parse_errors() {
        assert!(FallbackTagger::parse("word NN\n").is_err());
        assert!(FallbackTagger::parse("word\tXYZ\n").is_err());
        let t = FallbackTagger::parse("# comment\nfoo\tVB\n\n").unwrap();
        assert_eq!(t.tag_token("Foo"), PosTag::Vb);
    }
}
