//! Joint labeling model over the statement sentences of one problem.
//!
//! For a labeling `S ∈ {0,1}^N` the unnormalized log-probability is
//!
//! ```text
//! α0 Σ_j svm_j [S_j=0] + α1 Σ_j svm_j [S_j=1]
//!   + β11 Σ_{k≠j} sim_kj [S_k=1][S_j=1] + β00 Σ_{k≠j} sim_kj [S_k=0][S_j=0]
//! ```
//!
//! with pair sums over ordered pairs. Everything is computed by exact
//! enumeration of the `2^N` labelings in Gray-code order, so each step
//! updates the four sufficient statistics in `O(N)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::corpus::WordProblem;
use crate::error::{CoreError, Result};
use crate::features::{FeatureSpace, FeatureVariant};
use crate::svm::{svm_score, Calibration, SvmModel};
use crate::MAX_STATEMENTS;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta11: f64,
    pub beta00: f64,
}

impl JointParams {
    pub fn new(alpha0: f64, alpha1: f64, beta11: f64, beta00: f64) -> Self {
        JointParams {
            alpha0,
            alpha1,
            beta11,
            beta00,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.alpha0, self.alpha1, self.beta11, self.beta00]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Per-problem inputs of the joint model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemGraph {
    pub problem_id: String,
    svm_scores: Vec<f64>,
    /// Row-major `N × N`.
    sim: Vec<f64>,
    gold: Option<Vec<bool>>,
}

impl ProblemGraph {
    pub fn new(problem_id: impl Into<String>, svm_scores: Vec<f64>, sim: Vec<f64>, gold: Option<Vec<bool>>) -> Result<Self> {
        let problem_id = problem_id.into();
        let n = svm_scores.len();
        let bad = |reason: String| CoreError::InvalidProblem {
            problem_id: problem_id.clone(),
            reason,
        };
        if n == 0 {
            return Err(bad("joint graph needs at least one statement".into()));
        }
        if n > MAX_STATEMENTS {
            return Err(bad(format!("{n} statements exceed the enumeration cap of {MAX_STATEMENTS}")));
        }
        if sim.len() != n * n {
            return Err(bad(format!("similarity matrix has {} entries, expected {}", sim.len(), n * n)));
        }
        for i in 0..n {
            if sim[i * n + i] != 0.0 {
                return Err(bad("similarity diagonal must be zero".into()));
            }
            for j in 0..i {
                if (sim[i * n + j] - sim[j * n + i]).abs() > 1e-12 {
                    return Err(bad("similarity matrix is not symmetric".into()));
                }
            }
        }
        if svm_scores.iter().chain(&sim).any(|v| !v.is_finite()) {
            return Err(bad("joint graph holds non-finite values".into()));
        }
        if let Some(g) = &gold {
            if g.len() != n {
                return Err(bad(format!("{} gold labels for {n} statements", g.len())));
            }
        }
        Ok(ProblemGraph {
            problem_id,
            svm_scores,
            sim,
            gold,
        })
    }

    pub fn n(&self) -> usize {
        self.svm_scores.len()
    }

    pub fn svm_scores(&self) -> &[f64] {
        &self.svm_scores
    }

    pub fn sim(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.n() + j]
    }

    pub fn gold(&self) -> Option<&[bool]> {
        self.gold.as_deref()
    }

    fn gold_config(&self) -> Result<Configuration> {
        self.gold
            .as_ref()
            .map(|g| Configuration { bits: g.clone() })
            .ok_or_else(|| CoreError::MissingGold {
                problem_id: self.problem_id.clone(),
            })
    }
}

/// One labeling; `true` is relevant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub bits: Vec<bool>,
}

impl Configuration {
    pub fn from_mask(mask: u32, n: usize) -> Self {
        Configuration {
            bits: (0..n).map(|j| mask >> j & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u32 {
        self.bits.iter().enumerate().map(|(j, &b)| (b as u32) << j).sum()
    }

    pub fn relevant_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Sufficient statistics `(Σ svm [S=0], Σ svm [S=1], pair sum 11, pair sum 00)`.
pub fn features(graph: &ProblemGraph, config: &Configuration) -> [f64; 4] {
    let n = graph.n();
    assert_eq!(config.bits.len(), n, "configuration length must match the graph");
    let mut f = [0.0; 4];
    for j in 0..n {
        let s = graph.svm_scores[j];
        if config.bits[j] {
            f[1] += s;
        } else {
            f[0] += s;
        }
        for k in 0..n {
            if k == j || config.bits[k] != config.bits[j] {
                continue;
            }
            if config.bits[j] {
                f[2] += graph.sim(k, j);
            } else {
                f[3] += graph.sim(k, j);
            }
        }
    }
    f
}

fn dot4(a: [f64; 4], b: [f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn energy(graph: &ProblemGraph, params: &JointParams, config: &Configuration) -> f64 {
    dot4(params.to_array(), features(graph, config))
}

/// Calls `visit(mask, features)` for all `2^N` labelings in Gray-code order.
fn for_each_config(graph: &ProblemGraph, mut visit: impl FnMut(u32, [f64; 4])) {
    let n = graph.n();
    let scores = &graph.svm_scores;
    let total: f64 = scores.iter().sum();
    // Row sums of sim restricted to relevant / irrelevant columns.
    let mut r1 = vec![0.0; n];
    let mut r0: Vec<f64> = (0..n).map(|i| (0..n).map(|k| graph.sim(i, k)).sum()).collect();
    let mut s1 = 0.0;
    let mut p11 = 0.0;
    let mut p00: f64 = r0.iter().sum();
    let mut mask = 0u32;
    visit(mask, [total - s1, s1, p11, p00]);
    for step in 1u32..(1u32 << n) {
        let i = step.trailing_zeros() as usize;
        let row = &graph.sim[i * n..(i + 1) * n];
        if mask >> i & 1 == 0 {
            s1 += scores[i];
            p11 += 2.0 * r1[i];
            p00 -= 2.0 * r0[i];
            for (k, &v) in row.iter().enumerate() {
                r1[k] += v;
                r0[k] -= v;
            }
        } else {
            s1 -= scores[i];
            p11 -= 2.0 * r1[i];
            p00 += 2.0 * r0[i];
            for (k, &v) in row.iter().enumerate() {
                r1[k] -= v;
                r0[k] += v;
            }
        }
        mask ^= 1 << i;
        visit(mask, [total - s1, s1, p11, p00]);
    }
}

/// Streaming log-sum-exp with weighted feature and marginal sums.
struct Accumulator {
    max: f64,
    sum: f64,
    feat: [f64; 4],
    marg: Option<Vec<f64>>,
}

impl Accumulator {
    fn new(marginals_of: Option<usize>) -> Self {
        Accumulator {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            feat: [0.0; 4],
            marg: marginals_of.map(|n| vec![0.0; n]),
        }
    }

    fn push(&mut self, e: f64, f: [f64; 4], mask: u32) {
        if e > self.max {
            let scale = (self.max - e).exp();
            self.sum *= scale;
            self.feat.iter_mut().for_each(|v| *v *= scale);
            if let Some(m) = &mut self.marg {
                m.iter_mut().for_each(|v| *v *= scale);
            }
            self.max = e;
        }
        let w = (e - self.max).exp();
        self.sum += w;
        for k in 0..4 {
            self.feat[k] += w * f[k];
        }
        if let Some(m) = &mut self.marg {
            for (j, v) in m.iter_mut().enumerate() {
                if mask >> j & 1 == 1 {
                    *v += w;
                }
            }
        }
    }

    fn log_z(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

fn accumulate(graph: &ProblemGraph, params: &JointParams, marginals: bool) -> Accumulator {
    let theta = params.to_array();
    let mut acc = Accumulator::new(marginals.then_some(graph.n()));
    for_each_config(graph, |mask, f| acc.push(dot4(theta, f), f, mask));
    acc
}

pub fn log_partition(graph: &ProblemGraph, params: &JointParams) -> f64 {
    accumulate(graph, params, false).log_z()
}

/// `Z`; overflows to infinity for large energies, use [`log_partition`].
pub fn partition(graph: &ProblemGraph, params: &JointParams) -> f64 {
    log_partition(graph, params).exp()
}

pub fn joint_prob(graph: &ProblemGraph, params: &JointParams, config: &Configuration) -> f64 {
    (energy(graph, params, config) - log_partition(graph, params)).exp()
}

/// `P(S_j = 1)` for every statement.
pub fn marginals(graph: &ProblemGraph, params: &JointParams) -> Vec<f64> {
    let acc = accumulate(graph, params, true);
    acc.marg.expect("requested").iter().map(|v| v / acc.sum).collect()
}

fn sorted_by_id(graphs: &[ProblemGraph]) -> Vec<&ProblemGraph> {
    let mut v: Vec<&ProblemGraph> = graphs.iter().collect();
    v.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));
    v
}

/// Log-likelihood of the gold labelings and its gradient, summed over graphs
/// in problem-id order.
pub fn ll_and_gradient(graphs: &[ProblemGraph], params: &JointParams) -> Result<(f64, [f64; 4])> {
    let theta = params.to_array();
    let mut ll = 0.0;
    let mut grad = [0.0; 4];
    for g in sorted_by_id(graphs) {
        let gold = features(g, &g.gold_config()?);
        let acc = accumulate(g, params, false);
        ll += dot4(theta, gold) - acc.log_z();
        for k in 0..4 {
            grad[k] += gold[k] - acc.feat[k] / acc.sum;
        }
    }
    Ok((ll, grad))
}

pub fn log_likelihood(graphs: &[ProblemGraph], params: &JointParams) -> Result<f64> {
    ll_and_gradient(graphs, params).map(|(ll, _)| ll)
}

/// `(∂/∂α0, ∂/∂α1, ∂/∂β11, ∂/∂β00)` of [`log_likelihood`].
pub fn ll_gradient(graphs: &[ProblemGraph], params: &JointParams) -> Result<[f64; 4]> {
    ll_and_gradient(graphs, params).map(|(_, g)| g)
}

/// Highest-energy labeling. Near-ties (within `1e-12` relative) go to the
/// labeling with more relevant sentences, then to the lexicographically
/// largest bit vector.
pub fn map_infer(graph: &ProblemGraph, params: &JointParams) -> Configuration {
    let theta = params.to_array();
    let mut best_mask = 0u32;
    let mut best_e = f64::NEG_INFINITY;
    for_each_config(graph, |mask, f| {
        let e = dot4(theta, f);
        let tol = 1e-12 * (1.0 + best_e.abs().max(e.abs()));
        let wins = if best_e == f64::NEG_INFINITY || e > best_e + tol {
            true
        } else if e >= best_e - tol {
            prefer(mask, best_mask)
        } else {
            false
        };
        if wins {
            best_mask = mask;
            best_e = e;
        }
    });
    Configuration::from_mask(best_mask, graph.n())
}

/// Tie rule: more relevant bits, then the first differing position set.
fn prefer(a: u32, b: u32) -> bool {
    match a.count_ones().cmp(&b.count_ones()) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => {
            let diff = a ^ b;
            diff != 0 && a >> diff.trailing_zeros() & 1 == 1
        }
    }
}

/// Where a graph's SVM margins come from.
#[derive(Debug, Clone, Copy)]
pub enum ScoreSource<'a> {
    /// Margins of the final model (test problems).
    Model,
    /// Held-out margins from calibration (training problems).
    OutOfFold(&'a Calibration),
}

pub fn build_graph(problem: &WordProblem, model: &SvmModel, space: &FeatureSpace, source: ScoreSource<'_>) -> Result<ProblemGraph> {
    if space.config.variant != FeatureVariant::TermsQsSim {
        return Err(CoreError::InvalidConfig(
            "the joint model needs margins from the terms_qs_sim classifier".into(),
        ));
    }
    let scores = match source {
        ScoreSource::Model => space
            .problem_features(problem)?
            .iter()
            .map(|x| svm_score(model, x))
            .collect::<Result<Vec<_>>>()?,
        ScoreSource::OutOfFold(cal) => cal
            .out_of_fold_scores(&problem.id)
            .ok_or_else(|| CoreError::InvalidProblem {
                problem_id: problem.id.clone(),
                reason: "no out-of-fold scores recorded".into(),
            })?
            .to_vec(),
    };
    ProblemGraph::new(problem.id.clone(), scores, space.similarity_matrix(problem), problem.gold_bits())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTrainConfig {
    /// Stop when the largest gradient component of the penalized objective
    /// falls to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight `ε` of the `−ε‖θ‖²` penalty.
    pub ridge: f64,
}

impl Default for JointTrainConfig {
    fn default() -> Self {
        JointTrainConfig {
            tol: 1e-6,
            max_iter: 500,
            ridge: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Unpenalized log-likelihood at the returned parameters.
    pub final_ll: f64,
    /// Penalized log-likelihood after each accepted iterate, starting at the
    /// initial point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Trained parameters file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointModelFile {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta11: f64,
    pub beta00: f64,
    pub ridge: f64,
    pub optimizer_report: OptimizerReport,
}

impl JointModelFile {
    pub fn new(params: JointParams, ridge: f64, mut report: OptimizerReport) -> Self {
        report.trace.clear();
        JointModelFile {
            alpha0: params.alpha0,
            alpha1: params.alpha1,
            beta11: params.beta11,
            beta00: params.beta00,
            ridge,
            optimizer_report: report,
        }
    }

    pub fn params(&self) -> JointParams {
        JointParams::new(self.alpha0, self.alpha1, self.beta11, self.beta00)
    }
}

const LBFGS_MEMORY: usize = 7;
const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Maximizes `log_likelihood − ridge ‖θ‖²` with L-BFGS and backtracking
/// Armijo line search.
pub fn train_joint(graphs: &[ProblemGraph], init: JointParams, cfg: &JointTrainConfig) -> Result<(JointParams, OptimizerReport)> {
    if graphs.is_empty() {
        return Err(CoreError::DegenerateTrainingSet("joint training needs at least one problem".into()));
    }
    if !(cfg.tol > 0.0) || !(cfg.ridge >= 0.0) {
        return Err(CoreError::InvalidConfig(format!(
            "joint tol must be positive and ridge non-negative (tol {}, ridge {})",
            cfg.tol, cfg.ridge
        )));
    }
    if !init.is_finite() {
        return Err(CoreError::InvalidConfig("joint initial parameters must be finite".into()));
    }
    // Minimize f = −(ll − ε‖θ‖²).
    let eval = |x: [f64; 4]| -> Result<(f64, [f64; 4], f64)> {
        let (ll, g) = ll_and_gradient(graphs, &JointParams::from_array(x))?;
        let pen: f64 = x.iter().map(|v| v * v).sum::<f64>() * cfg.ridge;
        let grad = [0, 1, 2, 3].map(|k| -g[k] + 2.0 * cfg.ridge * x[k]);
        Ok((-(ll - pen), grad, ll))
    };
    let norm_inf = |g: &[f64; 4]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut x = init.to_array();
    let (mut f, mut g, mut ll) = eval(x)?;
    let mut trace = vec![-f];
    let mut history: VecDeque<([f64; 4], [f64; 4], f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = norm_inf(&g) <= cfg.tol;

    while !converged && iterations < cfg.max_iter {
        let mut d = two_loop(&g, &history);
        if dot4(g, d) >= 0.0 {
            history.clear();
            d = g.map(|v| -v);
        }
        let accepted = loop {
            let first = history.is_empty();
            let mut step = if first { 1.0f64.min(1.0 / norm_inf(&g)) } else { 1.0 };
            let slope = dot4(g, d);
            let mut found = None;
            for _ in 0..MAX_HALVINGS {
                let xn = [0, 1, 2, 3].map(|k| x[k] + step * d[k]);
                let (fn_, gn, lln) = eval(xn)?;
                if fn_.is_finite() && fn_ <= f + ARMIJO_C1 * step * slope {
                    found = Some((xn, fn_, gn, lln));
                    break;
                }
                step *= 0.5;
            }
            match found {
                Some(r) => break r,
                None if !first => {
                    history.clear();
                    d = g.map(|v| -v);
                }
                None => {
                    return Err(CoreError::LineSearchFailure {
                        iteration: iterations,
                        objective: -f,
                    })
                }
            }
        };
        let (xn, fn_, gn, lln) = accepted;
        let s = [0, 1, 2, 3].map(|k| xn[k] - x[k]);
        let y = [0, 1, 2, 3].map(|k| gn[k] - g[k]);
        let sy = dot4(s, y);
        if sy > 1e-10 {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
        ll = lln;
        iterations += 1;
        trace.push(-f);
        converged = norm_inf(&g) <= cfg.tol;
    }

    Ok((
        JointParams::from_array(x),
        OptimizerReport {
            iterations,
            final_grad_norm: norm_inf(&g),
            final_ll: ll,
            trace,
            converged,
        },
    ))
}

/// L-BFGS two-loop recursion: `−H g`.
fn two_loop(g: &[f64; 4], history: &VecDeque<([f64; 4], [f64; 4], f64)>) -> [f64; 4] {
    let mut q = *g;
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot4(*s, q);
        for k in 0..4 {
            q[k] -= a * y[k];
        }
        alphas.push(a);
    }
    let gamma = history.back().map_or(1.0, |(s, y, _)| dot4(*s, *y) / dot4(*y, *y));
    let mut r = q.map(|v| gamma * v);
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot4(*y, r);
        for k in 0..4 {
            r[k] += s[k] * (a - b);
        }
    }
    r.map(|v| -v)
}
