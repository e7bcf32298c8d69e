//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentrel_core::corpus::{generate_synthetic, GenConfig};
use sentrel_core::features::FeatureSpace;
use sentrel_core::svm::TrainSet;
use sentrel_core::textproc::FallbackTagger;
use sentrel_core::{Corpus, FeatureConfig, ProblemGraph, StopwordList};

/// Default synthetic corpus, seed 42.
pub fn corpus() -> Corpus {
    generate_synthetic(&GenConfig::default(), 42).expect("default config is valid")
}

/// Feature space fitted on [`corpus`] with the default feature config.
pub fn feature_space(corpus: &Corpus) -> FeatureSpace {
    FeatureSpace::fit(corpus, FeatureConfig::default(), StopwordList::default(), Some(FallbackTagger::default()))
        .expect("synthetic corpus has a vocabulary")
}

pub fn train_set(corpus: &Corpus, space: &FeatureSpace) -> TrainSet {
    TrainSet::from_problems(&corpus.problems, space).expect("synthetic corpus is labeled")
}

/// Graph with `n` statements, uniform scores in [-2, 2) and similarities in [0, 1).
pub fn random_graph(n: usize, seed: u64) -> ProblemGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen::<f64>();
            sim[i * n + j] = v;
            sim[j * n + i] = v;
        }
    }
    let gold = (0..n).map(|_| rng.gen()).collect();
    ProblemGraph::new("bench", scores, sim, Some(gold)).expect("valid graph")
}
