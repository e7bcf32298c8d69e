use serde::{Deserialize, Serialize};

use super::{Corpus, Label};
use crate::textproc::{preprocess, PipelineConfig, PosCounts, PosTag, StopwordList, StopwordMode, POS_DIM};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub relevant: usize,
    pub irrelevant: usize,
    pub unlabeled: usize,
}

/// Mean preprocessed length in terms; `None` when there are no sentences.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AverageLengths {
    pub stopwords_removed: Option<f64>,
    pub stopwords_kept: Option<f64>,
}

/// Problem counts by number of irrelevant statements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupSizes {
    pub zero: usize,
    pub one: usize,
    pub two: usize,
    pub three_or_more: usize,
}

/// Average per-sentence count of each tag, by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosTable {
    pub tags: Vec<String>,
    pub relevant: Vec<f64>,
    pub irrelevant: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub problem_count: usize,
    pub question_count: usize,
    pub sentence_counts: LabelCounts,
    pub relevant_length: AverageLengths,
    pub irrelevant_length: AverageLengths,
    pub groups: GroupSizes,
    pub pos_table: PosTable,
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let mut out = String::new();
        out.push_str(&format!(
            "problems: {}   questions: {}\n",
            self.problem_count, self.question_count
        ));
        out.push_str(&format!(
            "groups by irrelevant count: 0={} 1={} 2={} 3+={}\n\n",
            self.groups.zero, self.groups.one, self.groups.two, self.groups.three_or_more
        ));
        out.push_str(&format!("{:<12}{:>10}{:>12}{:>16}\n", "type", "sentences", "avg default", "avg w/ stopwords"));
        for (name, n, len) in [
            ("relevant", self.sentence_counts.relevant, &self.relevant_length),
            ("irrelevant", self.sentence_counts.irrelevant, &self.irrelevant_length),
        ] {
            out.push_str(&format!(
                "{:<12}{:>10}{:>12}{:>16}\n",
                name,
                n,
                fmt(len.stopwords_removed),
                fmt(len.stopwords_kept)
            ));
        }
        out.push_str(&format!("\n{:<8}{:>10}{:>12}\n", "tag", "relevant", "irrelevant"));
        for (i, tag) in self.pos_table.tags.iter().enumerate() {
            out.push_str(&format!(
                "{:<8}{:>10.3}{:>12.3}\n",
                tag, self.pos_table.relevant[i], self.pos_table.irrelevant[i]
            ));
        }
        out
    }
}

struct Accumulator {
    n: usize,
    removed: usize,
    kept: usize,
    pos: [u64; POS_DIM],
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator {
            n: 0,
            removed: 0,
            kept: 0,
            pos: [0; POS_DIM],
        }
    }
}

impl Accumulator {
    fn lengths(&self) -> AverageLengths {
        let avg = |total: usize| (self.n > 0).then(|| total as f64 / self.n as f64);
        AverageLengths {
            stopwords_removed: avg(self.removed),
            stopwords_kept: avg(self.kept),
        }
    }

    fn pos_means(&self) -> Vec<f64> {
        self.pos
            .iter()
            .map(|&c| if self.n == 0 { 0.0 } else { c as f64 / self.n as f64 })
            .collect()
    }
}

/// Counts and average lengths per label over statement sentences. Lengths
/// are measured on the preprocessed term stream under both stopword modes;
/// `pipeline` supplies the stemming and case settings. Sentences without
/// POS annotations contribute zero counts to the POS table.
pub fn corpus_stats(corpus: &Corpus, pipeline: &PipelineConfig, stopwords: &StopwordList) -> StatsReport {
    let remove = PipelineConfig {
        stopword_mode: StopwordMode::Remove,
        ..*pipeline
    };
    let keep = PipelineConfig {
        stopword_mode: StopwordMode::Keep,
        ..*pipeline
    };
    let mut counts = LabelCounts::default();
    let mut groups = GroupSizes::default();
    let mut rel = Accumulator::default();
    let mut irr = Accumulator::default();
    let mut question_count = 0;

    for p in &corpus.problems {
        match p.irrelevant_count() {
            0 => groups.zero += 1,
            1 => groups.one += 1,
            2 => groups.two += 1,
            _ => groups.three_or_more += 1,
        }
        for s in &p.sentences {
            if s.is_question() {
                question_count += 1;
                continue;
            }
            let acc = match s.label {
                Label::Relevant => {
                    counts.relevant += 1;
                    &mut rel
                }
                Label::Irrelevant => {
                    counts.irrelevant += 1;
                    &mut irr
                }
                Label::Unlabeled => {
                    counts.unlabeled += 1;
                    continue;
                }
            };
            acc.n += 1;
            acc.removed += preprocess(&s.text, &remove, stopwords).len();
            acc.kept += preprocess(&s.text, &keep, stopwords).len();
            if let Some(tags) = &s.pos_tags {
                let c = PosCounts::from_tags(tags);
                for (slot, v) in acc.pos.iter_mut().zip(c.0) {
                    *slot += v as u64;
                }
            }
        }
    }

    StatsReport {
        problem_count: corpus.len(),
        question_count,
        sentence_counts: counts,
        relevant_length: rel.lengths(),
        irrelevant_length: irr.lengths(),
        groups,
        pos_table: PosTable {
            tags: PosTag::ALL.iter().map(|t| t.as_str().to_string()).collect(),
            relevant: rel.pos_means(),
            irrelevant: irr.pos_means(),
        },
    }
}
