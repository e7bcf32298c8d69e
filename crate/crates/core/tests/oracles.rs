//! Independent oracles: brute-force recomputation of library results.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentrel_core::eval::{ln_gamma, paired_t_test, regularized_incomplete_beta, student_t_cdf, two_sided_p};
use sentrel_core::features::{FeatureSpace, SparseVector};
use sentrel_core::joint::{self, log_likelihood, ll_gradient, map_infer, marginals, partition};
use sentrel_core::svm::{primal_objective, train_svm, TrainSet};
use sentrel_core::textproc::preprocess;
use sentrel_core::{
    Configuration, Corpus, FeatureConfig, JointParams, Label, PipelineConfig, ProblemGraph, Role, Sentence,
    StopwordList, StopwordMode, WordProblem,
};

fn table_one() -> WordProblem {
    let mut sentences: Vec<Sentence> = [
        ("s1", "The Island Tours Theater opens except for Sunday.", Label::Irrelevant),
        ("s2", "The theater opens only in the morning.", Label::Irrelevant),
        ("s3", "There are 210 people on a tour.", Label::Relevant),
        ("s4", "The tourists are divided into equal groups.", Label::Relevant),
    ]
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

/// Hand-stemmed tokens of the sentences above, stopwords kept.
const TABLE_ONE_TOKENS: [&str; 5] = [
    "the island tour theater open except for sundai",
    "the theater open onli in the morn",
    "there ar 210 peopl on a tour",
    "the tourist ar divid into equal group",
    "if each group ha 7 peopl how mani group will there be",
];

fn brute_cosine(docs: &[Vec<&str>], a: usize, b: usize) -> f64 {
    let n = docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for d in docs {
        let mut u = d.clone();
        u.sort();
        u.dedup();
        for t in u {
            *df.entry(t).or_default() += 1.0;
        }
    }
    let vec = |d: &Vec<&str>| {
        let mut v: HashMap<String, f64> = HashMap::new();
        for &t in d {
            *v.entry(t.to_string()).or_default() += (n / df[t]).ln();
        }
        v
    };
    let (va, vb) = (vec(&docs[a]), vec(&docs[b]));
    let dot: f64 = va.iter().map(|(t, x)| x * vb.get(t).unwrap_or(&0.0)).sum();
    let na = va.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[test]
fn table_one_tokens_match_hand_stemming() {
    let p = table_one();
    let stop = StopwordList::default();
    let pipeline = PipelineConfig::new(StopwordMode::Keep);
    for (s, hand) in p.sentences.iter().zip(TABLE_ONE_TOKENS) {
        assert_eq!(preprocess(&s.text, &pipeline, &stop), hand.split(' ').collect::<Vec<_>>());
    }
}

#[test]
fn table_one_similarities_match_brute_force() {
    let corpus = Corpus::new("t", vec![table_one()]).unwrap();
    let space = FeatureSpace::fit(&corpus, FeatureConfig::default(), StopwordList::default(), None).unwrap();
    let docs: Vec<Vec<&str>> = TABLE_ONE_TOKENS.iter().map(|t| t.split(' ').collect()).collect();

    let qs = question_similarities(&space, &corpus.problems[0]);
    let pinned_qs = [0.0, 0.0, 0.0991727581995311, 0.09432996843101171];
    for i in 0..4 {
        assert!((qs[i] - brute_cosine(&docs, i, 4)).abs() < 1e-12);
        assert!((qs[i] - pinned_qs[i]).abs() < 1e-12, "s{} {}", i + 1, qs[i]);
    }

    let m = space.similarity_matrix(&corpus.problems[0]);
    let pinned = [
        (0, 1, 0.1874362609383321),
        (0, 2, 0.0694259831806628),
        (0, 3, 0.020523815233934307),
        (1, 2, 0.0),
        (1, 3, 0.045933903890559624),
        (2, 3, 0.07175611592390178),
    ];
    for (i, j, v) in pinned {
        assert!((m[i * 4 + j] - brute_cosine(&docs, i, j)).abs() < 1e-12);
        assert!((m[i * 4 + j] - v).abs() < 1e-12);
        assert_eq!(m[i * 4 + j], m[j * 4 + i]);
    }
}

fn question_similarities(space: &FeatureSpace, p: &WordProblem) -> Vec<f64> {
    let q = space.sim_vector(p.question());
    p.statements().map(|s| sentrel_core::features::cosine(&space.sim_vector(s), &q)).collect()
}

#[test]
fn special_functions_match_statrs() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    for &x in &[0.1, 0.5, 1.0, 1.5, 2.5, 7.3, 20.0, 171.5] {
        let want = statrs::function::gamma::ln_gamma(x);
        assert!((ln_gamma(x) - want).abs() < 1e-12 * want.abs().max(1.0), "ln_gamma({x})");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let a = rng.gen_range(0.05..60.0);
        let b = rng.gen_range(0.05..60.0);
        let x = rng.gen::<f64>();
        let want = statrs::function::beta::beta_reg(a, b, x);
        assert!((regularized_incomplete_beta(a, b, x) - want).abs() < 1e-10, "I({a},{b},{x})");
    }
    for _ in 0..500 {
        let df = rng.gen_range(0.5..200.0);
        let t = rng.gen_range(-12.0..12.0);
        let want = StudentsT::new(0.0, 1.0, df).unwrap().cdf(t);
        assert!((student_t_cdf(t, df) - want).abs() < 1e-10, "cdf({t}, {df})");
    }
}

#[test]
fn paired_t_test_matches_direct_formula() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(3..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = mean / (var / n as f64).sqrt();
        let p = 2.0 * StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap().cdf(-t.abs());
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t_statistic - t).abs() < 1e-9 * t.abs().max(1.0));
        assert!((r.p_value_two_sided - p).abs() < 1e-9);
        assert!((two_sided_p(t, (n - 1) as f64) - p).abs() < 1e-9);
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> ProblemGraph {
    let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen::<f64>();
            sim[i * n + j] = v;
            sim[j * n + i] = v;
        }
    }
    let gold: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    ProblemGraph::new(format!("g{n}"), scores, sim, Some(gold)).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> JointParams {
    JointParams::from_array([(); 4].map(|_| rng.gen_range(-3.0..3.0)))
}

/// Direct double-loop energy, independent of the library's feature code.
fn direct_energy(g: &ProblemGraph, p: &JointParams, bits: &[bool]) -> f64 {
    let mut e = 0.0;
    for j in 0..g.n() {
        let s = g.svm_scores()[j];
        e += if bits[j] { p.alpha1 * s } else { p.alpha0 * s };
        for k in 0..g.n() {
            if k != j && bits[k] == bits[j] {
                e += if bits[j] { p.beta11 } else { p.beta00 } * g.sim(k, j);
            }
        }
    }
    e
}

fn bits_of(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

#[test]
fn partition_matches_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let n = rng.gen_range(1..=7);
        let g = random_graph(&mut rng, n);
        let p = random_params(&mut rng);
        let z: f64 = (0..1u32 << n).map(|m| direct_energy(&g, &p, &bits_of(m, n)).exp()).sum();
        assert!((partition(&g, &p) - z).abs() < 1e-9 * z);
        let total: f64 = (0..1u32 << n)
            .map(|m| joint::joint_prob(&g, &p, &Configuration::from_mask(m, n)))
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
        // Marginals from the direct enumeration.
        let marg = marginals(&g, &p);
        for i in 0..n {
            let want: f64 = (0..1u32 << n)
                .filter(|m| m >> i & 1 == 1)
                .map(|m| direct_energy(&g, &p, &bits_of(m, n)).exp())
                .sum::<f64>()
                / z;
            assert!((marg[i] - want).abs() < 1e-9);
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = 1e-5;
    for _ in 0..20 {
        let graphs: Vec<ProblemGraph> = (0..3)
            .map(|_| {
                let n = rng.gen_range(1..=6);
                random_graph(&mut rng, n)
            })
            .collect();
        let p = random_params(&mut rng);
        let g = ll_gradient(&graphs, &p).unwrap();
        for k in 0..4 {
            let mut up = p.to_array();
            let mut dn = p.to_array();
            up[k] += h;
            dn[k] -= h;
            let fd = (log_likelihood(&graphs, &JointParams::from_array(up)).unwrap()
                - log_likelihood(&graphs, &JointParams::from_array(dn)).unwrap())
                / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-5 * g[k].abs().max(1.0), "k={k}: {} vs {fd}", g[k]);
        }
    }
}

#[test]
fn log_likelihood_is_concave_along_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let graphs: Vec<ProblemGraph> = (0..2)
            .map(|_| {
                let n = rng.gen_range(1..=5);
                random_graph(&mut rng, n)
            })
            .collect();
        let p = random_params(&mut rng).to_array();
        let d = [(); 4].map(|_| rng.gen_range(-1.0..1.0));
        let at = |t: f64| {
            let q: [f64; 4] = std::array::from_fn(|k| p[k] + t * d[k]);
            log_likelihood(&graphs, &JointParams::from_array(q)).unwrap()
        };
        let t = 0.3;
        assert!(at(-t) + at(t) - 2.0 * at(0.0) <= 1e-9);
    }
}

#[test]
fn swapping_labels_and_parameters_preserves_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let g = random_graph(&mut rng, n);
        let p = random_params(&mut rng);
        let swapped = JointParams::new(p.alpha1, p.alpha0, p.beta00, p.beta11);
        let full = (1u32 << n) - 1;
        for m in 0..1u32 << n {
            let a = joint::joint_prob(&g, &p, &Configuration::from_mask(m, n));
            let b = joint::joint_prob(&g, &swapped, &Configuration::from_mask(m ^ full, n));
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_pairwise_weights_factorize() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let g = random_graph(&mut rng, n);
        let mut p = random_params(&mut rng);
        p.beta11 = 0.0;
        p.beta00 = 0.0;
        let marg = marginals(&g, &p);
        for (i, &s) in g.svm_scores().iter().enumerate() {
            let want = 1.0 / (1.0 + ((p.alpha0 - p.alpha1) * s).exp());
            assert!((marg[i] - want).abs() < 1e-12);
        }
        let map = map_infer(&g, &p);
        for (i, &s) in g.svm_scores().iter().enumerate() {
            let (e1, e0) = (p.alpha1 * s, p.alpha0 * s);
            if e1 != e0 {
                assert_eq!(map.bits[i], e1 > e0);
            }
        }
    }
}

#[test]
fn map_is_the_most_probable_configuration() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..100 {
        let n = rng.gen_range(1..=7);
        let g = random_graph(&mut rng, n);
        let p = random_params(&mut rng);
        let best = (0..1u32 << n)
            .map(|m| direct_energy(&g, &p, &bits_of(m, n)))
            .fold(f64::NEG_INFINITY, f64::max);
        let map = map_infer(&g, &p);
        assert!((direct_energy(&g, &p, &map.bits) - best).abs() < 1e-9);
    }
}

fn random_train_set(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> TrainSet {
    let mut data = TrainSet::new(dim);
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut pairs = Vec::new();
        for k in 0..dim {
            if rng.gen::<f64>() < 0.6 {
                pairs.push((k, rng.gen_range(-1.0..1.0) + if k == 0 { 0.5 * y } else { 0.0 }));
            }
        }
        data.push(SparseVector::from_pairs(pairs), y, &format!("p{}", i / 4));
    }
    data
}

#[test]
fn svm_solution_beats_random_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for &c in &[0.01, 1.0, 100.0] {
        let data = random_train_set(&mut rng, 60, 8);
        let m = train_svm(&data, c, 1e-8).unwrap();
        let base = primal_objective(&m.weights, m.bias, c, &data);
        assert!((m.primal_objective(&data) - base).abs() < 1e-12);
        for _ in 0..100 {
            let mut d: Vec<f64> = (0..=data.dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            d.iter_mut().for_each(|x| *x *= 1e-3 / norm);
            let w: Vec<f64> = m.weights.iter().zip(&d).map(|(a, b)| a + b).collect();
            assert!(base <= primal_objective(&w, m.bias + d[data.dimension], c, &data) + 1e-12);
        }
    }
}
