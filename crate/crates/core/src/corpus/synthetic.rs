//! Seeded generator of labeled word problems.
//!
//! Each problem gets a question topic, a second "given" topic that only
//! relevant statements use, and a distractor topic used by its irrelevant
//! statements. On top of that, statements draw from a global class-flavoured
//! vocabulary (weak evidence available to a bag-of-words classifier) and from
//! the topics of other problems (noise). Topic words are pseudo-words that
//! the Porter stemmer leaves intact.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Label, Role, Sentence, WordProblem};
use crate::error::{CoreError, Result};
use crate::textproc::{tokenize, FallbackTagger, StopwordList};
use crate::MAX_STATEMENTS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_problems: usize,
    /// Probability of each irrelevant-statement count.
    pub irrelevant_count_distribution: BTreeMap<usize, f64>,
    /// Inclusive range of relevant statements per problem.
    pub relevant_count: [usize; 2],
    /// Global pool of words that lean towards relevant statements.
    pub relevant_theme_vocab: usize,
    /// Global pool of words that lean towards irrelevant statements.
    pub irrelevant_theme_vocab: usize,
    /// Topic words; each problem draws its question, given and distractor
    /// topics from this pool.
    pub shared_vocab: usize,
    /// Inclusive range of content words per statement.
    pub sentence_length: [usize; 2],
    pub topic_size: usize,
    /// Chance that a function word comes from the sentence's class-leaning
    /// list rather than the common list.
    pub class_function_rate: f64,
    /// Per content word: chance of a word from the sentence's own class pool.
    pub class_word_rate: f64,
    /// Per content word: chance of a word from the other class's pool.
    pub cross_word_rate: f64,
    /// Per content word: chance of a word from the sentence's own topic.
    pub topic_word_rate: f64,
    /// Share of a relevant statement's topic words taken from the question
    /// topic (the rest come from the given topic).
    pub question_anchor_share: f64,
    pub relevant_number_rate: f64,
    pub irrelevant_number_rate: f64,
    pub emit_pos_tags: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_problems: 120,
            irrelevant_count_distribution: BTreeMap::from([
                (1, 56.0 / 120.0),
                (2, 40.0 / 120.0),
                (3, 24.0 / 120.0),
            ]),
            relevant_count: [1, 4],
            relevant_theme_vocab: 40,
            irrelevant_theme_vocab: 40,
            shared_vocab: 160,
            sentence_length: [2, 5],
            topic_size: 3,
            class_function_rate: 0.2,
            class_word_rate: 0.1,
            cross_word_rate: 0.1,
            topic_word_rate: 0.65,
            question_anchor_share: 0.5,
            relevant_number_rate: 0.8,
            irrelevant_number_rate: 0.4,
            emit_pos_tags: true,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        if self.n_problems == 0 {
            return bad("n_problems must be positive".into());
        }
        if self.relevant_theme_vocab == 0 || self.irrelevant_theme_vocab == 0 {
            return bad("class vocabularies must be non-empty".into());
        }
        if self.topic_size == 0 || self.shared_vocab < 3 * self.topic_size {
            return bad("shared_vocab must hold three disjoint topics of topic_size > 0".into());
        }
        let [lo, hi] = self.relevant_count;
        if lo == 0 || lo > hi {
            return bad(format!("relevant_count range {lo}..={hi} is invalid"));
        }
        let [lo, hi] = self.sentence_length;
        if lo == 0 || lo > hi {
            return bad(format!("sentence_length range {lo}..={hi} is invalid"));
        }
        if self.irrelevant_count_distribution.is_empty() {
            return bad("irrelevant_count_distribution is empty".into());
        }
        let total: f64 = self.irrelevant_count_distribution.values().sum();
        if self.irrelevant_count_distribution.values().any(|&p| !(0.0..=1.0).contains(&p))
            || (total - 1.0).abs() > 1e-9
        {
            return bad(format!("irrelevant_count_distribution must sum to 1, got {total}"));
        }
        let max_irr = *self.irrelevant_count_distribution.keys().last().expect("non-empty");
        if self.relevant_count[1] + max_irr > MAX_STATEMENTS {
            return bad(format!("problems could exceed {MAX_STATEMENTS} statements"));
        }
        let rates = [
            self.class_function_rate,
            self.class_word_rate,
            self.cross_word_rate,
            self.topic_word_rate,
            self.question_anchor_share,
            self.relevant_number_rate,
            self.irrelevant_number_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r))
            || self.class_word_rate + self.cross_word_rate + self.topic_word_rate > 1.0
        {
            return bad("rates must be probabilities and the word rates must sum to at most 1".into());
        }
        Ok(())
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const FINAL_VOWELS: &[u8] = b"ao";

/// Deterministic pseudo-word for an index. Words end in `a` or `o`, which no
/// Porter rule touches.
fn pseudo_word(index: usize) -> String {
    let syl = CONSONANTS.len() * VOWELS.len();
    let fin = CONSONANTS.len() * FINAL_VOWELS.len();
    let space = syl * syl * fin;
    let mut i = (index * 7919) % space;
    let mut out = Vec::with_capacity(6);
    for _ in 0..2 {
        let s = i % syl;
        i /= syl;
        out.push(CONSONANTS[s / VOWELS.len()]);
        out.push(VOWELS[s % VOWELS.len()]);
    }
    out.push(CONSONANTS[i / FINAL_VOWELS.len()]);
    out.push(FINAL_VOWELS[i % FINAL_VOWELS.len()]);
    String::from_utf8(out).expect("ascii")
}

const COMMON_FUNCTION: &[&str] = &["the", "a", "of", "in", "on", "to", "and", "at", "with", "for"];
const RELEVANT_FUNCTION: &[&str] = &["each", "are", "has", "there", "into", "if", "every", "per"];
const IRRELEVANT_FUNCTION: &[&str] = &["is", "was", "only", "it", "very", "also", "her", "his"];

struct Vocab {
    relevant: Vec<String>,
    irrelevant: Vec<String>,
    shared: Vec<String>,
}

impl Vocab {
    fn build(cfg: &GenConfig) -> Self {
        let stop = StopwordList::default();
        let mut seen = HashSet::new();
        let mut words = (0..).map(pseudo_word).filter(|w| !stop.contains(w) && seen.insert(w.clone()));
        let mut take = |n: usize| (&mut words).take(n).collect::<Vec<_>>();
        Vocab {
            relevant: take(cfg.relevant_theme_vocab),
            irrelevant: take(cfg.irrelevant_theme_vocab),
            shared: take(cfg.shared_vocab),
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len() as u32) as usize]
}

fn range(rng: &mut ChaCha8Rng, [lo, hi]: [usize; 2]) -> usize {
    rng.gen_range(lo as u32..=hi as u32) as usize
}

struct Topics {
    question: Vec<String>,
    given: Vec<String>,
    distractor: Vec<String>,
}

fn render(words: &[String], terminal: char) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(0..1) {
        let upper = first.to_uppercase();
        text.replace_range(0..1, &upper);
    }
    text.push(terminal);
    text
}

fn statement(rng: &mut ChaCha8Rng, cfg: &GenConfig, vocab: &Vocab, topics: &Topics, relevant: bool) -> String {
    let (own, other, class_fn) = if relevant {
        (&vocab.relevant, &vocab.irrelevant, RELEVANT_FUNCTION)
    } else {
        (&vocab.irrelevant, &vocab.relevant, IRRELEVANT_FUNCTION)
    };
    let n_content = range(rng, cfg.sentence_length);
    let mut words = Vec::new();
    for _ in 0..n_content {
        let function = if rng.gen::<f64>() < cfg.class_function_rate {
            pick(rng, class_fn)
        } else {
            pick(rng, COMMON_FUNCTION)
        };
        words.push(function.to_string());
        let r = rng.gen::<f64>();
        let word = if r < cfg.class_word_rate {
            pick(rng, own)
        } else if r < cfg.class_word_rate + cfg.cross_word_rate {
            pick(rng, other)
        } else if r < cfg.class_word_rate + cfg.cross_word_rate + cfg.topic_word_rate {
            if !relevant {
                pick(rng, &topics.distractor)
            } else if rng.gen::<f64>() < cfg.question_anchor_share {
                pick(rng, &topics.question)
            } else {
                pick(rng, &topics.given)
            }
        } else {
            pick(rng, &vocab.shared)
        };
        words.push(word.clone());
    }
    let number_rate = if relevant {
        cfg.relevant_number_rate
    } else {
        cfg.irrelevant_number_rate
    };
    if rng.gen::<f64>() < number_rate {
        let at = rng.gen_range(0..=words.len() as u32) as usize;
        words.insert(at, rng.gen_range(2u32..1000).to_string());
    }
    render(&words, '.')
}

fn question(rng: &mut ChaCha8Rng, topics: &Topics) -> String {
    let mut anchors = topics.question.clone();
    anchors.shuffle(rng);
    let n = anchors.len().min(2 + rng.gen_range(0..2u32) as usize);
    let mut words: Vec<String> = ["how", "many"].iter().map(|s| s.to_string()).collect();
    words.push(anchors[0].clone());
    let tail: &[&str] = pick(rng, &[&["are", "there"][..], &["will", "there", "be"], &["does", "it", "take"]]);
    words.extend(tail.iter().map(|s| s.to_string()));
    for w in &anchors[1..n] {
        words.push(pick(rng, &["for", "in", "with"]).to_string());
        words.push(w.clone());
    }
    render(&words, '?')
}

fn sentence(id: String, text: String, role: Role, label: Label, tagger: Option<&FallbackTagger>) -> Sentence {
    let pos_tags = tagger.map(|t| t.tag_tokens(&tokenize(&text)));
    Sentence {
        id,
        text,
        role,
        label,
        pos_tags,
    }
}

/// Generates a labeled corpus; identical `(config, seed)` give identical
/// corpora on every platform.
pub fn generate_synthetic(cfg: &GenConfig, seed: u64) -> Result<Corpus> {
    cfg.validate()?;
    let vocab = Vocab::build(cfg);
    let tagger = cfg.emit_pos_tags.then(FallbackTagger::default);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist: Vec<(usize, f64)> = cfg.irrelevant_count_distribution.iter().map(|(&k, &p)| (k, p)).collect();

    let mut problems = Vec::with_capacity(cfg.n_problems);
    for pi in 0..cfg.n_problems {
        let mut pool = vocab.shared.clone();
        pool.shuffle(&mut rng);
        let k = cfg.topic_size;
        let topics = Topics {
            question: pool[..k].to_vec(),
            given: pool[k..2 * k].to_vec(),
            distractor: pool[2 * k..3 * k].to_vec(),
        };

        let u = rng.gen::<f64>();
        let mut acc = 0.0;
        let mut n_irrelevant = dist[dist.len() - 1].0;
        for &(count, p) in &dist {
            acc += p;
            if u < acc {
                n_irrelevant = count;
                break;
            }
        }
        let n_relevant = range(&mut rng, cfg.relevant_count);

        let mut labels: Vec<bool> = std::iter::repeat(true)
            .take(n_relevant)
            .chain(std::iter::repeat(false).take(n_irrelevant))
            .collect();
        labels.shuffle(&mut rng);

        let mut sentences: Vec<Sentence> = labels
            .iter()
            .enumerate()
            .map(|(i, &relevant)| {
                let text = statement(&mut rng, cfg, &vocab, &topics, relevant);
                sentence(format!("s{}", i + 1), text, Role::Statement, Label::from_bit(relevant), tagger.as_ref())
            })
            .collect();
        let q = question(&mut rng, &topics);
        sentences.push(sentence("q".into(), q, Role::Question, Label::Unlabeled, tagger.as_ref()));
        problems.push(WordProblem {
            id: format!("p{:04}", pi + 1),
            sentences,
        });
    }
    Corpus::new(format!("synthetic-{seed}"), problems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::porter_stem;

    #[test]
    fn deterministic() {
        let cfg = GenConfig::default();
        let a = generate_synthetic(&cfg, 42).unwrap().to_jsonl();
        let b = generate_synthetic(&cfg, 42).unwrap().to_jsonl();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(&cfg, 43).unwrap().to_jsonl());
    }

    #[test]
    fn degenerate_distribution() {
        let cfg = GenConfig {
            n_problems: 10,
            irrelevant_count_distribution: BTreeMap::from([(1, 1.0)]),
            ..GenConfig::default()
        };
        let c = generate_synthetic(&cfg, 1).unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.problems.iter().all(|p| p.irrelevant_count() == 1));
        assert!(c.problems.iter().all(|p| p.is_labeled()));
    }

    #[test]
    fn inconsistent_configs_rejected() {
        let bad = [
            GenConfig { n_problems: 0, ..GenConfig::default() },
            GenConfig { irrelevant_count_distribution: BTreeMap::from([(1, 0.5)]), ..GenConfig::default() },
            GenConfig { relevant_count: [3, 2], ..GenConfig::default() },
            GenConfig { shared_vocab: 2, ..GenConfig::default() },
            GenConfig { irrelevant_count_distribution: BTreeMap::from([(19, 1.0)]), ..GenConfig::default() },
            GenConfig { class_word_rate: 0.9, topic_word_rate: 0.9, ..GenConfig::default() },
            GenConfig { class_function_rate: 1.5, ..GenConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate_synthetic(&cfg, 0), Err(CoreError::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn pseudo_words_survive_stemming() {
        let stop = StopwordList::default();
        for i in 0..2000 {
            let w = pseudo_word(i);
            assert_eq!(porter_stem(&w), w);
            let _ = stop.contains(&w);
        }
        let distinct: HashSet<_> = (0..2000).map(pseudo_word).collect();
        assert_eq!(distinct.len(), 2000);
    }

    #[test]
    fn questions_are_well_formed() {
        let c = generate_synthetic(&GenConfig::default(), 42).unwrap();
        for p in &c.problems {
            let q = p.question();
            assert!(q.text.starts_with("How many"));
            assert!(q.text.ends_with('?'));
            assert_eq!(q.pos_tags.as_ref().map(Vec::len), Some(tokenize(&q.text).len()));
        }
    }
}
