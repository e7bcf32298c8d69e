//! Word problems, sentences and corpus-level operations.

mod split;
mod stats;
mod synthetic;

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::textproc::{tokenize, PosTag};
use crate::MAX_STATEMENTS;

pub use split::{split_corpus, Fraction, Grouping, SplitOutcome, SplitSpec};
pub use stats::{corpus_stats, AverageLengths, GroupSizes, LabelCounts, PosTable, StatsReport};
pub use synthetic::{generate_synthetic, GenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Question,
    Statement,
}

/// Gold label of a sentence. `Unlabeled` is written as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Label {
    Relevant,
    Irrelevant,
    #[default]
    Unlabeled,
}

impl Label {
    /// `+1` for relevant, `-1` for irrelevant.
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Relevant => Some(1.0),
            Label::Irrelevant => Some(-1.0),
            Label::Unlabeled => None,
        }
    }

    pub fn from_bit(relevant: bool) -> Self {
        if relevant {
            Label::Relevant
        } else {
            Label::Irrelevant
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Relevant => serializer.serialize_str("relevant"),
            Label::Irrelevant => serializer.serialize_str("irrelevant"),
            Label::Unlabeled => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match Option::<String>::deserialize(deserializer)?.as_deref() {
            None => Ok(Label::Unlabeled),
            Some("relevant") => Ok(Label::Relevant),
            Some("irrelevant") => Ok(Label::Irrelevant),
            Some(other) => Err(serde::de::Error::custom(format!(
                "label must be \"relevant\", \"irrelevant\" or null, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub role: Role,
    #[serde(default)]
    pub label: Label,
    #[serde(default)]
    pub pos_tags: Option<Vec<PosTag>>,
}

impl Sentence {
    pub fn is_question(&self) -> bool {
        self.role == Role::Question
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProblem {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl WordProblem {
    /// Checks the per-problem invariants: one question, 1..=20 statements,
    /// unique sentence ids, non-empty text, POS tags aligned with tokens.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(CoreError::InvalidProblem {
                problem_id: self.id.clone(),
                reason,
            })
        };
        let questions = self.sentences.iter().filter(|s| s.is_question()).count();
        match questions {
            0 => return fail("no question sentence".into()),
            1 => {}
            _ => return fail("multiple question sentences".into()),
        }
        let n = self.sentences.len() - 1;
        if n == 0 {
            return fail("no statement sentences".into());
        }
        if n > MAX_STATEMENTS {
            return fail(format!(
                "{n} statement sentences exceed the enumeration cap of {MAX_STATEMENTS}"
            ));
        }
        let mut ids = HashSet::new();
        for s in &self.sentences {
            if !ids.insert(s.id.as_str()) {
                return fail(format!("duplicate sentence id {:?}", s.id));
            }
            if s.text.trim().is_empty() {
                return fail(format!("sentence {:?} has empty text", s.id));
            }
            if let Some(tags) = &s.pos_tags {
                let tokens = tokenize(&s.text).len();
                if tags.len() != tokens {
                    return fail(format!(
                        "sentence {:?} has {} POS tags for {} tokens",
                        s.id,
                        tags.len(),
                        tokens
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn question(&self) -> &Sentence {
        self.sentences
            .iter()
            .find(|s| s.is_question())
            .expect("validated problem has a question")
    }

    /// Statement sentences in document order.
    pub fn statements(&self) -> impl Iterator<Item = &Sentence> + '_ {
        self.sentences.iter().filter(|s| !s.is_question())
    }

    pub fn statement_count(&self) -> usize {
        self.statements().count()
    }

    pub fn irrelevant_count(&self) -> usize {
        self.statements().filter(|s| s.label == Label::Irrelevant).count()
    }

    pub fn is_labeled(&self) -> bool {
        self.statements().all(|s| s.label != Label::Unlabeled)
    }

    /// Gold relevance bits of the statements, if every one is labeled.
    pub fn gold_bits(&self) -> Option<Vec<bool>> {
        self.statements()
            .map(|s| match s.label {
                Label::Relevant => Some(true),
                Label::Irrelevant => Some(false),
                Label::Unlabeled => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub problems: Vec<WordProblem>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, problems: Vec<WordProblem>) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            problems,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for p in &self.problems {
            if !ids.insert(p.id.as_str()) {
                return Err(CoreError::InvalidCorpus(format!("duplicate problem id {:?}", p.id)));
            }
            p.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.problems.iter().map(|p| p.sentences.len()).sum()
    }

    /// Errors unless every statement sentence carries a gold label.
    pub fn require_labeled(&self) -> Result<()> {
        match self.problems.iter().find(|p| !p.is_labeled()) {
            Some(p) => Err(CoreError::InvalidProblem {
                problem_id: p.id.clone(),
                reason: "unlabeled statement sentence in a labeled corpus".into(),
            }),
            None => Ok(()),
        }
    }

    pub fn parse_jsonl(name: impl Into<String>, reader: impl BufRead) -> Result<Self> {
        let mut problems = Vec::new();
        let mut ids = HashSet::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CoreError::MalformedRecord {
                line: n + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let problem: WordProblem =
                serde_json::from_str(&line).map_err(|e| CoreError::MalformedRecord {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            problem.validate()?;
            if !ids.insert(problem.id.clone()) {
                return Err(CoreError::InvalidCorpus(format!(
                    "line {}: duplicate problem id {:?}",
                    n + 1,
                    problem.id
                )));
            }
            problems.push(problem);
        }
        Ok(Corpus {
            name: name.into(),
            problems,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.problems {
            out.push_str(&serde_json::to_string(p).expect("problem serializes"));
            out.push('\n');
        }
        out
    }
}

/// Reads a JSON Lines corpus; the corpus name is the file stem.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| CoreError::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::parse_jsonl(name, BufReader::new(file))
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    file.write_all(corpus.to_jsonl().as_bytes())
        .map_err(|e| CoreError::io(path, e))
}
