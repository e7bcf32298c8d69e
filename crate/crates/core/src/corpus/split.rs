use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Corpus;
use crate::error::{CoreError, Result};

/// An exact fraction in `(0, 1)`, written as `"num/den"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    numerator: u32,
    denominator: u32,
}

impl Fraction {
    pub fn new(numerator: u32, denominator: u32) -> Result<Self> {
        if numerator == 0 || denominator == 0 || numerator >= denominator {
            return Err(CoreError::InvalidConfig(format!(
                "fraction {numerator}/{denominator} is not in (0, 1)"
            )));
        }
        Ok(Fraction {
            numerator,
            denominator,
        })
    }

    /// `floor(self * n)`.
    pub fn floor_of(self, n: usize) -> usize {
        (n as u64 * self.numerator as u64 / self.denominator as u64) as usize
    }

    pub fn as_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl Default for Fraction {
    fn default() -> Self {
        Fraction {
            numerator: 1,
            denominator: 4,
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Fraction {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoreError::InvalidConfig(format!("expected a fraction like 1/4, got {s:?}"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        Fraction::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Groups of 0, 1, 2 and 3+ irrelevant sentences.
    #[default]
    ByIrrelevantCount,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(default)]
    pub train_fraction: Fraction,
    pub seed: u64,
    #[serde(default)]
    pub grouping: Grouping,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            train_fraction: Fraction::default(),
            seed,
            grouping: Grouping::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub train: Corpus,
    pub test: Corpus,
    pub warnings: Vec<String>,
}

fn group_of(irrelevant: usize, grouping: Grouping) -> usize {
    match grouping {
        Grouping::None => 0,
        Grouping::ByIrrelevantCount => irrelevant.min(3),
    }
}

/// Grouped train/test split. Within each group `floor(fraction * size)`
/// problems (at least one) go to train; both sides keep corpus order.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<SplitOutcome> {
    if corpus.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    corpus.require_labeled()?;

    let mut groups: [Vec<usize>; 4] = Default::default();
    for (i, p) in corpus.problems.iter().enumerate() {
        groups[group_of(p.irrelevant_count(), spec.grouping)].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; corpus.len()];
    for members in groups.iter_mut().filter(|g| !g.is_empty()) {
        members.sort_by(|&a, &b| corpus.problems[a].id.cmp(&corpus.problems[b].id));
        members.shuffle(&mut rng);
        let n_train = spec.train_fraction.floor_of(members.len()).max(1);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }

    let (train, test): (Vec<_>, Vec<_>) = corpus
        .problems
        .iter()
        .cloned()
        .zip(&in_train)
        .partition(|(_, &t)| t);
    let mut warnings = Vec::new();
    if test.is_empty() {
        warnings.push(format!(
            "test split is empty: every group of corpus {:?} is too small to hold out a problem",
            corpus.name
        ));
    }
    Ok(SplitOutcome {
        train: Corpus {
            name: format!("{}.train", corpus.name),
            problems: train.into_iter().map(|(p, _)| p).collect(),
        },
        test: Corpus {
            name: format!("{}.test", corpus.name),
            problems: test.into_iter().map(|(p, _)| p).collect(),
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Role, Sentence, WordProblem};
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn problem(id: String, irrelevant: usize, relevant: usize) -> WordProblem {
        let mut sentences = Vec::new();
        for i in 0..relevant + irrelevant {
            sentences.push(Sentence {
                id: format!("s{i}"),
                text: format!("sentence {i}"),
                role: Role::Statement,
                label: Label::from_bit(i >= irrelevant),
                pos_tags: None,
            });
        }
        sentences.push(Sentence {
            id: "q".into(),
            text: "how many?".into(),
            role: Role::Question,
            label: Label::Unlabeled,
            pos_tags: None,
        });
        WordProblem { id, sentences }
    }

    fn corpus_with_groups(sizes: &[usize]) -> Corpus {
        let mut problems = Vec::new();
        for (g, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                problems.push(problem(format!("g{g}-{i:03}"), g + 1, 2));
            }
        }
        Corpus::new("groups", problems).unwrap()
    }

    #[test]
    fn quarter_of_each_group() {
        let c = corpus_with_groups(&[56, 40, 24]);
        let out = split_corpus(&c, &SplitSpec::new(7)).unwrap();
        assert_eq!(out.train.len(), 30);
        assert_eq!(out.test.len(), 90);
        let mut per_group = [0usize; 3];
        for p in &out.train.problems {
            per_group[p.irrelevant_count() - 1] += 1;
        }
        assert_eq!(per_group, [14, 10, 6]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn deterministic_in_seed() {
        let c = corpus_with_groups(&[10, 8, 6]);
        let ids = |o: SplitOutcome| o.train.problems.into_iter().map(|p| p.id).collect::<Vec<_>>();
        let a = ids(split_corpus(&c, &SplitSpec::new(3)).unwrap());
        let b = ids(split_corpus(&c, &SplitSpec::new(3)).unwrap());
        assert_eq!(a, b);
        let others: Vec<_> = (4..10).map(|s| ids(split_corpus(&c, &SplitSpec::new(s)).unwrap())).collect();
        assert!(others.iter().any(|o| *o != a));
    }

    #[test]
    fn single_problem_goes_to_train_with_warning() {
        let c = corpus_with_groups(&[1]);
        let out = split_corpus(&c, &SplitSpec::new(0)).unwrap();
        assert_eq!(out.train.len(), 1);
        assert!(out.test.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn empty_corpus_errors() {
        let c = Corpus::new("e", vec![]).unwrap();
        assert!(matches!(split_corpus(&c, &SplitSpec::new(0)), Err(CoreError::EmptyCorpus)));
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!("1/4".parse::<Fraction>().unwrap(), Fraction::default());
        assert!("4/4".parse::<Fraction>().is_err());
        assert!("0/4".parse::<Fraction>().is_err());
        assert!("0.25".parse::<Fraction>().is_err());
        assert_eq!(Fraction::new(1, 3).unwrap().floor_of(3), 1);
        let json = serde_json::to_string(&SplitSpec::new(5)).unwrap();
        assert_eq!(json, r#"{"train_fraction":"1/4","seed":5,"grouping":"by_irrelevant_count"}"#);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn split_is_a_group_preserving_partition(
            counts in prop::collection::vec((0usize..5, 1usize..4), 1..40),
            seed in any::<u64>(),
            num in 1u32..4,
        ) {
            let problems = counts.iter().enumerate()
                .map(|(i, &(irr, rel))| problem(format!("p{i}"), irr, rel))
                .collect();
            let c = Corpus::new("fuzz", problems).unwrap();
            let spec = SplitSpec { train_fraction: Fraction::new(num, 4).unwrap(), seed, grouping: Grouping::ByIrrelevantCount };
            let out = split_corpus(&c, &spec).unwrap();
            prop_assert_eq!(out.train.len() + out.test.len(), c.len());
            let mut seen: HashMap<&str, usize> = HashMap::new();
            for p in out.train.problems.iter().chain(&out.test.problems) {
                *seen.entry(p.id.as_str()).or_default() += 1;
            }
            prop_assert_eq!(seen.len(), c.len());
            prop_assert!(seen.values().all(|&n| n == 1));
            for g in 0..4 {
                let size = c.problems.iter().filter(|p| p.irrelevant_count().min(3) == g).count();
                let train = out.train.problems.iter().filter(|p| p.irrelevant_count().min(3) == g).count();
                let expected = if size == 0 { 0 } else { (size * num as usize / 4).max(1) };
                prop_assert_eq!(train, expected);
            }
        }
    }
}
