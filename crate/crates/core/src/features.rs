//! tf-idf term vectors, cosine similarity and feature assembly.
//!
//! Feature layout for one statement sentence:
//!
//! ```text
//! [0, |V|)             tf-idf weights of the term vocabulary
//! |V|                  question similarity   (terms_qs_sim only)
//! next 36 slots        POS tag counts        (pos_enabled only)
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, WordProblem};
use crate::error::{CoreError, Result};
use crate::textproc::{
    pos_frequencies, preprocess, FallbackTagger, PipelineConfig, StopwordList, StopwordMode, POS_DIM,
};

/// Sparse real vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sums duplicate indices and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    /// One past the largest stored index.
    pub fn span(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, v)| (i, v * c)).collect())
    }

    pub(crate) fn push_unchecked(&mut self, index: usize, value: f64) {
        debug_assert!(self.entries.last().map_or(true, |&(i, _)| i < index));
        if value != 0.0 {
            self.entries.push((index, value));
        }
    }
}

/// Cosine of the angle between two vectors; 0 when either is the zero
/// vector.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0)
}

/// Term index and sentence-level document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<u32>,
    n_documents: u32,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }

    pub fn n_documents(&self) -> u32 {
        self.n_documents
    }
}

/// Frozen tf-idf model: `weight(t) = tf(t) * ln(n_documents / df(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    pipeline: PipelineConfig,
}

/// Serialized form of a [`TfIdfModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfManifest {
    pub pipeline: PipelineConfig,
    pub n_documents: u32,
    pub terms: Vec<String>,
    pub document_frequency: Vec<u32>,
}

/// Builds the vocabulary from preprocessed training sentences. Terms are
/// indexed in lexicographic order; one sentence is one document.
pub fn build_tfidf(train_sentences: &[Vec<String>], pipeline: PipelineConfig) -> Result<TfIdfModel> {
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for sentence in train_sentences {
        let mut seen: Vec<&str> = sentence.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(CoreError::EmptyVocabulary);
    }
    TfIdfModel::from_manifest(TfIdfManifest {
        pipeline,
        n_documents: train_sentences.len() as u32,
        terms: df.keys().map(|t| t.to_string()).collect(),
        document_frequency: df.values().copied().collect(),
    })
}

impl TfIdfModel {
    pub fn from_manifest(m: TfIdfManifest) -> Result<Self> {
        if m.terms.len() != m.document_frequency.len() {
            return Err(CoreError::Bundle("tf-idf manifest: terms and frequencies differ in length".into()));
        }
        if m.document_frequency.iter().any(|&d| d == 0 || d > m.n_documents) {
            return Err(CoreError::Bundle("tf-idf manifest: document frequency out of range".into()));
        }
        let index: HashMap<String, usize> = m.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != m.terms.len() {
            return Err(CoreError::Bundle("tf-idf manifest: duplicate term".into()));
        }
        let n = m.n_documents as f64;
        let idf = m.document_frequency.iter().map(|&d| (n / d as f64).ln()).collect();
        Ok(TfIdfModel {
            vocabulary: Vocabulary {
                terms: m.terms,
                index,
                document_frequency: m.document_frequency,
                n_documents: m.n_documents,
            },
            idf,
            pipeline: m.pipeline,
        })
    }

    pub fn manifest(&self) -> TfIdfManifest {
        TfIdfManifest {
            pipeline: self.pipeline,
            n_documents: self.vocabulary.n_documents,
            terms: self.vocabulary.terms.clone(),
            document_frequency: self.vocabulary.document_frequency.clone(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.index_of(term).map(|i| self.idf[i])
    }

    /// tf × idf over in-vocabulary terms; unseen and zero-idf terms vanish.
    pub fn vectorize<S: AsRef<str>>(&self, terms: &[S]) -> SparseVector {
        let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
        for t in terms {
            if let Some(i) = self.vocabulary.index_of(t.as_ref()) {
                *tf.entry(i).or_default() += 1;
            }
        }
        let mut v = SparseVector::new();
        for (i, n) in tf {
            v.push_unchecked(i, n as f64 * self.idf[i]);
        }
        v
    }

    /// Preprocesses raw text with this model's pipeline, then vectorizes.
    pub fn vectorize_text(&self, text: &str, stopwords: &StopwordList) -> SparseVector {
        self.vectorize(&preprocess(text, &self.pipeline, stopwords))
    }
}

/// Cosine similarity of each statement to the problem's question, keyed by
/// sentence id.
pub fn qs_similarity(problem: &WordProblem, tfidf_sim: &TfIdfModel, stopwords: &StopwordList) -> BTreeMap<String, f64> {
    let q = tfidf_sim.vectorize_text(&problem.question().text, stopwords);
    problem
        .statements()
        .map(|s| (s.id.clone(), cosine(&tfidf_sim.vectorize_text(&s.text, stopwords), &q)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureVariant {
    TermsOnly,
    TermsQsSim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub variant: FeatureVariant,
    pub pos_enabled: bool,
    pub term_stopword_mode: StopwordMode,
    pub sim_stopword_mode: StopwordMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            variant: FeatureVariant::TermsQsSim,
            pos_enabled: false,
            term_stopword_mode: StopwordMode::Keep,
            sim_stopword_mode: StopwordMode::Keep,
        }
    }
}

/// Positions of the feature blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub vocab_size: usize,
    pub sim_index: Option<usize>,
    pub pos_start: Option<usize>,
    pub dimension: usize,
}

impl FeatureLayout {
    pub fn new(vocab_size: usize, config: &FeatureConfig) -> Self {
        let mut dimension = vocab_size;
        let sim_index = (config.variant == FeatureVariant::TermsQsSim).then(|| {
            dimension += 1;
            vocab_size
        });
        let pos_start = config.pos_enabled.then(|| {
            let start = dimension;
            dimension += POS_DIM;
            start
        });
        FeatureLayout {
            vocab_size,
            sim_index,
            pos_start,
            dimension,
        }
    }
}

/// Feature-layout manifest written next to trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutManifest {
    pub terms: Vec<String>,
    pub similarity_index: Option<usize>,
    pub pos_start: Option<usize>,
    pub dimension: usize,
}

/// Appends the similarity and POS blocks to a term vector.
pub fn assemble_features(
    problem: &WordProblem,
    sentence: &Sentence,
    config: &FeatureConfig,
    tfidf_terms: &TfIdfModel,
    tfidf_sim: &TfIdfModel,
    stopwords: &StopwordList,
    tagger: Option<&FallbackTagger>,
) -> Result<SparseVector> {
    let question = match config.variant {
        FeatureVariant::TermsQsSim => Some(tfidf_sim.vectorize_text(&problem.question().text, stopwords)),
        FeatureVariant::TermsOnly => None,
    };
    assemble_with_question(sentence, config, tfidf_terms, tfidf_sim, stopwords, tagger, question.as_ref())
}

fn assemble_with_question(
    sentence: &Sentence,
    config: &FeatureConfig,
    tfidf_terms: &TfIdfModel,
    tfidf_sim: &TfIdfModel,
    stopwords: &StopwordList,
    tagger: Option<&FallbackTagger>,
    question: Option<&SparseVector>,
) -> Result<SparseVector> {
    let layout = FeatureLayout::new(tfidf_terms.dimension(), config);
    let mut v = tfidf_terms.vectorize_text(&sentence.text, stopwords);
    if let (Some(index), Some(q)) = (layout.sim_index, question) {
        let s = tfidf_sim.vectorize_text(&sentence.text, stopwords);
        v.push_unchecked(index, cosine(&s, q));
    }
    if let Some(start) = layout.pos_start {
        let counts = pos_frequencies(sentence, tagger)?;
        for (k, &c) in counts.0.iter().enumerate() {
            v.push_unchecked(start + k, c as f64);
        }
    }
    Ok(v)
}

/// Everything needed to turn sentences into feature vectors: the two frozen
/// tf-idf models (term space and similarity space), the stopword list and the
/// optional fallback tagger.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    pub config: FeatureConfig,
    pub terms: TfIdfModel,
    pub sim: TfIdfModel,
    pub stopwords: StopwordList,
    pub tagger: Option<FallbackTagger>,
}

impl FeatureSpace {
    /// Fits both tf-idf models on every sentence (statements and questions)
    /// of the training corpus.
    pub fn fit(
        train: &Corpus,
        config: FeatureConfig,
        stopwords: StopwordList,
        tagger: Option<FallbackTagger>,
    ) -> Result<Self> {
        let fit_one = |mode: StopwordMode| {
            let pipeline = PipelineConfig::new(mode);
            let docs: Vec<Vec<String>> = train
                .problems
                .iter()
                .flat_map(|p| &p.sentences)
                .map(|s| preprocess(&s.text, &pipeline, &stopwords))
                .collect();
            build_tfidf(&docs, pipeline)
        };
        let terms = fit_one(config.term_stopword_mode)?;
        let sim = fit_one(config.sim_stopword_mode)?;
        Ok(FeatureSpace {
            config,
            terms,
            sim,
            stopwords,
            tagger,
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(self.terms.dimension(), &self.config)
    }

    pub fn layout_manifest(&self) -> LayoutManifest {
        let layout = self.layout();
        LayoutManifest {
            terms: self.terms.vocabulary().terms().to_vec(),
            similarity_index: layout.sim_index,
            pos_start: layout.pos_start,
            dimension: layout.dimension,
        }
    }

    pub fn sim_vector(&self, sentence: &Sentence) -> SparseVector {
        self.sim.vectorize_text(&sentence.text, &self.stopwords)
    }

    /// Feature vectors of the problem's statements, in document order.
    pub fn problem_features(&self, problem: &WordProblem) -> Result<Vec<SparseVector>> {
        let question = match self.config.variant {
            FeatureVariant::TermsQsSim => Some(self.sim_vector(problem.question())),
            FeatureVariant::TermsOnly => None,
        };
        problem
            .statements()
            .map(|s| {
                assemble_with_question(
                    s,
                    &self.config,
                    &self.terms,
                    &self.sim,
                    &self.stopwords,
                    self.tagger.as_ref(),
                    question.as_ref(),
                )
            })
            .collect()
    }

    /// Pairwise cosine similarity of the statements in similarity space,
    /// row-major `N × N` with a zero diagonal.
    pub fn similarity_matrix(&self, problem: &WordProblem) -> Vec<f64> {
        let vecs: Vec<SparseVector> = problem.statements().map(|s| self.sim_vector(s)).collect();
        let n = vecs.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = cosine(&vecs[i], &vecs[j]);
                m[i * n + j] = c;
                m[j * n + i] = c;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Role};
    use proptest::prelude::*;

    fn terms(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn idf_values() {
        let docs = vec![terms(&["210", "peopl", "tour"]), terms(&["tour"]), terms(&["tour", "tour"])];
        let m = build_tfidf(&docs, PipelineConfig::default()).unwrap();
        assert_eq!(m.idf("tour"), Some(0.0));
        assert!((m.idf("210").unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((m.idf("210").unwrap() - 1.0986).abs() < 1e-4);
        assert_eq!(m.idf("groups"), None);
        assert_eq!(m.vocabulary().document_frequency("tour"), Some(3));
    }

    #[test]
    fn vectorize_examples() {
        let docs = vec![terms(&["210", "peopl", "tour"]), terms(&["tour"]), terms(&["tour"])];
        let m = build_tfidf(&docs, PipelineConfig::default()).unwrap();
        assert!(m.vectorize::<String>(&[]).is_empty());
        assert!(m.vectorize(&["tour", "tour"]).is_empty());
        let v = m.vectorize(&["210", "peopl", "unseen"]);
        let ln3 = 3f64.ln();
        let i210 = m.vocabulary().index_of("210").unwrap();
        let ipeopl = m.vocabulary().index_of("peopl").unwrap();
        assert_eq!(v.entries(), &[(i210, ln3), (ipeopl, ln3)]);
        assert_eq!(m.vectorize(&["210", "210"]).get(i210), 2.0 * ln3);
    }

    #[test]
    fn empty_training_rejected() {
        assert!(matches!(
            build_tfidf(&[vec![], vec![]], PipelineConfig::default()),
            Err(CoreError::EmptyVocabulary)
        ));
    }

    #[test]
    fn cosine_examples() {
        let v = sv(&[(0, 0.3), (4, 2.0)]);
        assert_eq!(cosine(&v, &v), 1.0);
        assert_eq!(cosine(&sv(&[(0, 1.0)]), &sv(&[(1, 1.0)])), 0.0);
        assert!((cosine(&sv(&[(0, 1.0), (1, 1.0)]), &sv(&[(0, 1.0), (2, 1.0)])) - 0.5).abs() < 1e-15);
        assert_eq!(cosine(&SparseVector::new(), &v), 0.0);
    }

    #[test]
    fn from_pairs_normalizes() {
        let v = SparseVector::from_pairs(vec![(3, 1.0), (1, 2.0), (3, -1.0), (2, 0.0)]);
        assert_eq!(v.entries(), &[(1, 2.0)]);
    }

    fn table_one() -> WordProblem {
        let texts = [
            ("s1", "The Island Tours Theater opens except for Sunday.", Label::Irrelevant),
            ("s2", "The theater opens only in the morning.", Label::Irrelevant),
            ("s3", "There are 210 people on a tour.", Label::Relevant),
            ("s4", "The tourists are divided into equal groups.", Label::Relevant),
        ];
        let mut sentences: Vec<Sentence> = texts
            .iter()
            .map(|&(id, text, label)| Sentence {
                id: id.into(),
                text: text.into(),
                role: Role::Statement,
                label,
                pos_tags: None,
            })
            .collect();
        sentences.push(Sentence {
            id: "q".into(),
            text: "If each group has 7 people, how many groups will there be?".into(),
            role: Role::Question,
            label: Label::Unlabeled,
            pos_tags: None,
        });
        WordProblem {
            id: "table1".into(),
            sentences,
        }
    }

    #[test]
    fn table_one_question_similarity() {
        // idf fitted on the five sentences of the problem itself, stopwords kept.
        // Frozen value from an independent brute-force computation over the
        // same preprocessed terms (see tests/oracles.rs).
        let p = table_one();
        let corpus = Corpus::new("t", vec![p.clone()]).unwrap();
        let space = FeatureSpace::fit(
            &corpus,
            FeatureConfig {
                sim_stopword_mode: StopwordMode::Keep,
                ..FeatureConfig::default()
            },
            StopwordList::default(),
            None,
        )
        .unwrap();
        let sims = qs_similarity(&p, &space.sim, &space.stopwords);
        assert_eq!(sims.len(), 4);
        assert!(!sims.contains_key("q"));
        assert!(sims["s4"] > 0.0);
        assert!(sims["s3"] > 0.0);
    }

    #[test]
    fn identical_and_disjoint_statements() {
        let mut p = table_one();
        p.sentences[0].text = "If each group has 7 people, how many groups will there be?".into();
        p.sentences[1].text = "Zebra xylophone".into();
        let corpus = Corpus::new("t", vec![p.clone(), table_one_renamed()]).unwrap();
        let space = FeatureSpace::fit(&corpus, FeatureConfig::default(), StopwordList::default(), None).unwrap();
        let sims = qs_similarity(&p, &space.sim, &space.stopwords);
        assert!((sims["s1"] - 1.0).abs() < 1e-12);
        assert_eq!(sims["s2"], 0.0);
    }

    fn table_one_renamed() -> WordProblem {
        let mut p = table_one();
        p.id = "other".into();
        p
    }

    #[test]
    fn layout_dimensions() {
        let corpus = Corpus::new("t", vec![table_one()]).unwrap();
        let p = &corpus.problems[0];
        let s = &p.sentences[2];
        for (variant, pos, extra) in [
            (FeatureVariant::TermsOnly, false, 0),
            (FeatureVariant::TermsQsSim, false, 1),
            (FeatureVariant::TermsOnly, true, 36),
            (FeatureVariant::TermsQsSim, true, 37),
        ] {
            let config = FeatureConfig {
                variant,
                pos_enabled: pos,
                ..FeatureConfig::default()
            };
            let space = FeatureSpace::fit(&corpus, config, StopwordList::default(), Some(FallbackTagger::default())).unwrap();
            let layout = space.layout();
            assert_eq!(layout.dimension, space.terms.dimension() + extra);
            let v = assemble_features(p, s, &config, &space.terms, &space.sim, &space.stopwords, space.tagger.as_ref()).unwrap();
            assert!(v.span() <= layout.dimension);
            assert_eq!(layout.sim_index.is_some(), variant == FeatureVariant::TermsQsSim);
            if let Some(start) = layout.pos_start {
                assert_eq!(start, space.terms.dimension() + extra - 36);
                // "There are 210 people on a tour." -> EX VBP CD NNS IN DT NN under the fallback tagger
                let total: f64 = (start..start + 36).map(|i| v.get(i)).sum();
                assert_eq!(total, 7.0);
            }
        }
    }

    #[test]
    fn pos_without_tags_or_fallback_errors() {
        let corpus = Corpus::new("t", vec![table_one()]).unwrap();
        let config = FeatureConfig {
            pos_enabled: true,
            ..FeatureConfig::default()
        };
        let space = FeatureSpace::fit(&corpus, config, StopwordList::default(), None).unwrap();
        assert!(matches!(
            space.problem_features(&corpus.problems[0]),
            Err(CoreError::PosTagsUnavailable { .. })
        ));
    }

    #[test]
    fn similarity_matrix_is_symmetric_with_zero_diagonal() {
        let corpus = Corpus::new("t", vec![table_one()]).unwrap();
        let space = FeatureSpace::fit(&corpus, FeatureConfig::default(), StopwordList::default(), None).unwrap();
        let m = space.similarity_matrix(&corpus.problems[0]);
        let n = 4;
        for i in 0..n {
            assert_eq!(m[i * n + i], 0.0);
            for j in 0..n {
                assert_eq!(m[i * n + j], m[j * n + i]);
            }
        }
        assert!(m[1] > 0.0, "s1 and s2 share 'theater' and 'opens'");
    }

    fn arb_vec() -> impl Strategy<Value = SparseVector> {
        prop::collection::vec((0usize..30, 0.0f64..5.0), 0..12).prop_map(SparseVector::from_pairs)
    }

    proptest! {
        #[test]
        fn cosine_bounded_and_symmetric(a in arb_vec(), b in arb_vec()) {
            let ab = cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, cosine(&b, &a));
        }

        #[test]
        fn cosine_scale_invariant(a in arb_vec(), b in arb_vec(), c in 0.01f64..100.0) {
            prop_assert!((cosine(&a.scaled(c), &b) - cosine(&a, &b)).abs() <= 1e-12);
        }

        #[test]
        fn idf_monotone_in_df(docs in prop::collection::vec(prop::collection::vec("[a-e]", 1..4), 1..12)) {
            let m = build_tfidf(&docs, PipelineConfig::default()).unwrap();
            let v = m.vocabulary();
            for t1 in v.terms() {
                for t2 in v.terms() {
                    if v.document_frequency(t1) < v.document_frequency(t2) {
                        prop_assert!(m.idf(t1).unwrap() > m.idf(t2).unwrap());
                    }
                }
                let df = v.document_frequency(t1).unwrap();
                prop_assert!(df >= 1 && df <= v.n_documents());
            }
            for d in &docs {
                prop_assert!(m.vectorize(d).span() <= m.dimension());
            }
        }
    }
}
