//! Linear soft-margin SVM.
//!
//! Training solves the dual with sequential minimal optimization using
//! second-order working-set selection, keeping `w` explicit since the kernel
//! is linear. The bias is then re-fitted exactly against the primal hinge
//! loss, and the solve is repeated with a tighter KKT tolerance until the
//! duality gap meets the requested relative tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WordProblem};
use crate::error::{CoreError, Result};
use crate::eval::ConfusionCounts;
use crate::features::{FeatureSpace, LayoutManifest, SparseVector};

pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_TOL: f64 = 1e-8;

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    #[serde(default)]
    pub threshold: f64,
}

/// Model file contents: the model plus the feature layout it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModelFile {
    #[serde(flatten)]
    pub model: SvmModel,
    pub layout: LayoutManifest,
}

impl SvmModel {
    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SvmModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.threshold.is_finite() && self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite());
        if !finite || !(self.c > 0.0) {
            return Err(CoreError::Bundle("svm model holds non-finite values or a non-positive c".into()));
        }
        Ok(())
    }

    /// `0.5 ‖w‖² + c Σ max(0, 1 − y (w·x + b))`.
    pub fn primal_objective(&self, data: &TrainSet) -> f64 {
        primal_objective(&self.weights, self.bias, self.c, data)
    }
}

/// Raw margin `w·x + b`.
pub fn svm_score(model: &SvmModel, x: &SparseVector) -> Result<f64> {
    let dim = model.weights.len();
    if x.span() > dim {
        return Err(CoreError::DimensionOverflow {
            index: x.span() - 1,
            dim,
        });
    }
    Ok(dense_dot(&model.weights, x) + model.bias)
}

/// `+1` iff the score reaches the threshold.
pub fn svm_predict(model: &SvmModel, x: &SparseVector) -> Result<i8> {
    Ok(if svm_score(model, x)? >= model.threshold { 1 } else { -1 })
}

fn dense_dot(w: &[f64], x: &SparseVector) -> f64 {
    x.iter().map(|(i, v)| w[i] * v).sum()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSet {
    pub rows: Vec<SparseVector>,
    /// `+1.0` relevant, `-1.0` irrelevant.
    pub labels: Vec<f64>,
    pub problem_ids: Vec<String>,
    pub dimension: usize,
}

impl TrainSet {
    pub fn new(dimension: usize) -> Self {
        TrainSet {
            dimension,
            ..Default::default()
        }
    }

    pub fn push(&mut self, x: SparseVector, y: f64, problem_id: &str) {
        self.rows.push(x);
        self.labels.push(y);
        self.problem_ids.push(problem_id.to_string());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Statement sentences of labeled problems, featurized by `space`.
    pub fn from_problems<'a>(problems: impl IntoIterator<Item = &'a WordProblem>, space: &FeatureSpace) -> Result<Self> {
        let mut set = TrainSet::new(space.layout().dimension);
        for p in problems {
            let feats = space.problem_features(p)?;
            for (s, x) in p.statements().zip(feats) {
                let y = s.label.sign().ok_or_else(|| CoreError::MissingGold {
                    problem_id: p.id.clone(),
                })?;
                set.push(x, y, &p.id);
            }
        }
        Ok(set)
    }

    fn check(&self) -> Result<()> {
        let pos = self.labels.iter().filter(|&&y| y == 1.0).count();
        let neg = self.labels.iter().filter(|&&y| y == -1.0).count();
        if pos + neg != self.labels.len() {
            return Err(CoreError::DegenerateTrainingSet("labels must be +1 or -1".into()));
        }
        if pos == 0 || neg == 0 {
            return Err(CoreError::DegenerateTrainingSet(format!(
                "{pos} relevant and {neg} irrelevant examples; both classes are required"
            )));
        }
        for (row, x) in self.rows.iter().enumerate() {
            if x.iter().any(|(_, v)| !v.is_finite()) {
                return Err(CoreError::NonFiniteFeature { row });
            }
            if x.span() > self.dimension {
                return Err(CoreError::DimensionOverflow {
                    index: x.span() - 1,
                    dim: self.dimension,
                });
            }
        }
        Ok(())
    }
}

pub fn primal_objective(w: &[f64], b: f64, c: f64, data: &TrainSet) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = data
        .rows
        .iter()
        .zip(&data.labels)
        .map(|(x, &y)| (1.0 - y * (dense_dot(w, x) + b)).max(0.0))
        .sum();
    reg + c * hinge
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrace {
    /// Dual objective `0.5 αᵀQα − Σα` after every SMO step; non-increasing.
    pub dual_objective: Vec<f64>,
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
    pub converged: bool,
}

/// Trains with the default trace discarded. The solver is deterministic, so
/// no seed is taken.
pub fn train_svm(data: &TrainSet, c: f64, tol: f64) -> Result<SvmModel> {
    train_svm_traced(data, c, tol).map(|(m, _)| m)
}

pub fn train_svm_traced(data: &TrainSet, c: f64, tol: f64) -> Result<(SvmModel, SvmTrace)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(CoreError::InvalidConfig(format!("svm c must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(CoreError::InvalidConfig(format!("svm tol must be positive, got {tol}")));
    }
    data.check()?;
    let mut smo = Smo::new(data, c);
    let mut eps = 1e-3;
    loop {
        let converged = smo.solve(eps);
        let b = smo.refit_bias();
        let primal = primal_objective(&smo.w, b, c, data);
        let dual = -smo.dual_value();
        let gap = primal - dual;
        if gap <= tol * primal.abs().max(1.0) || eps < 1e-14 || !converged {
            let model = SvmModel {
                weights: smo.w.clone(),
                bias: b,
                c,
                threshold: 0.0,
            };
            let trace = SvmTrace {
                dual_objective: std::mem::take(&mut smo.trace),
                iterations: smo.iterations,
                primal,
                dual,
                converged: converged && gap <= tol * primal.abs().max(1.0),
            };
            return Ok((model, trace));
        }
        eps *= 0.1;
    }
}

struct Smo<'a> {
    x: &'a [SparseVector],
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    qd: Vec<f64>,
    w: Vec<f64>,
    scratch: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
}

impl<'a> Smo<'a> {
    fn new(data: &'a TrainSet, c: f64) -> Self {
        let n = data.len();
        Smo {
            x: &data.rows,
            y: &data.labels,
            c,
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
            qd: data.rows.iter().map(|x| x.dot(x)).collect(),
            w: vec![0.0; data.dimension],
            scratch: vec![0.0; data.dimension],
            trace: Vec::new(),
            iterations: 0,
        }
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    /// `0.5 αᵀQα − Σα` from the maintained gradient.
    fn dual_value(&self) -> f64 {
        0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    }

    /// Kernel row `x_i · x_t` for all t.
    fn kernel_row(&mut self, i: usize) -> Vec<f64> {
        for (k, v) in self.x[i].iter() {
            self.scratch[k] = v;
        }
        let row = self.x.iter().map(|xt| xt.iter().map(|(k, v)| self.scratch[k] * v).sum()).collect();
        for (k, _) in self.x[i].iter() {
            self.scratch[k] = 0.0;
        }
        row
    }

    fn select(&mut self, eps: f64) -> Option<(usize, usize, Vec<f64>)> {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let i = i_sel?;
        let ki = self.kernel_row(i);
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let v = -self.y[t] * self.grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = self.qd[i] + self.qd[t] - 2.0 * ki[t];
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax - gmin < eps {
            return None;
        }
        j_sel.map(|j| (i, j, ki))
    }

    /// Runs SMO until the maximal KKT violation drops below `eps`. Returns
    /// false if the iteration cap was hit.
    fn solve(&mut self, eps: f64) -> bool {
        loop {
            if self.iterations >= MAX_ITER {
                return false;
            }
            let Some((i, j, ki)) = self.select(eps) else {
                return true;
            };
            self.iterations += 1;
            self.step(i, j, ki[j]);
            self.trace.push(self.dual_value());
        }
    }

    fn step(&mut self, i: usize, j: usize, kij: f64) {
        let c = self.c;
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let quad = self.qd[i] + self.qd[j] - 2.0 * kij;
        let quad = if quad > 0.0 { quad } else { TAU };
        if yi != yj {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;

        // Δw = y_i Δα_i x_i + y_j Δα_j x_j; G_k += y_k x_k·Δw.
        let (di, dj) = (yi * (ai - old_i), yj * (aj - old_j));
        for (k, v) in self.x[i].iter() {
            self.scratch[k] += di * v;
        }
        for (k, v) in self.x[j].iter() {
            self.scratch[k] += dj * v;
        }
        for (g, (xk, &yk)) in self.grad.iter_mut().zip(self.x.iter().zip(self.y)) {
            *g += yk * xk.iter().map(|(k, v)| self.scratch[k] * v).sum::<f64>();
        }
        for idx in self.x[i].iter().chain(self.x[j].iter()).map(|(k, _)| k) {
            self.w[idx] += self.scratch[idx];
            self.scratch[idx] = 0.0;
        }
    }

    /// Bias minimizing `Σ max(0, 1 − y (w·x + b))` for the current `w`,
    /// chosen as the point of the minimizing interval closest to the SMO
    /// estimate.
    fn refit_bias(&self) -> f64 {
        let b0 = self.smo_bias();
        // Each term is convex piecewise linear in b with a kink at t = y − w·x;
        // for y = +1 slope −1 left of t, for y = −1 slope +1 right of t.
        let mut kinks: Vec<f64> = self
            .x
            .iter()
            .zip(self.y)
            .map(|(x, &y)| y - dense_dot(&self.w, x))
            .collect();
        kinks.sort_by(f64::total_cmp);
        // The slope is -(#positives) left of every kink and rises by one at
        // each kink, so it is zero between kink P-1 and kink P.
        let p = self.y.iter().filter(|&&y| y > 0.0).count();
        let (lo, hi) = (kinks[p - 1], kinks[p]);
        b0.clamp(lo, hi)
    }

    /// LIBSVM-style bias from the free support vectors.
    fn smo_bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.c;
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum += yg;
            }
        }
        let rho = if n_free > 0 { sum / n_free as f64 } else { (ub + lb) / 2.0 };
        -rho
    }
}

/// Threshold and regularization chosen by two-fold cross-validation over
/// training problems.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub model: SvmModel,
    /// Held-out margin of every training statement, keyed by problem id then
    /// statement position.
    pub out_of_fold: Vec<(String, Vec<f64>)>,
    /// Mean held-out F1 at the chosen `(c, θ)`.
    pub held_out_f1: f64,
    pub warnings: Vec<String>,
}

impl Calibration {
    pub fn out_of_fold_scores(&self, problem_id: &str) -> Option<&[f64]> {
        self.out_of_fold
            .iter()
            .find(|(id, _)| id == problem_id)
            .map(|(_, s)| s.as_slice())
    }
}

/// Problem indices of the two folds: sort by id, shuffle, alternate.
pub fn fold_assignment(problems: &[WordProblem], seed: u64) -> [Vec<usize>; 2] {
    let mut order: Vec<usize> = (0..problems.len()).collect();
    order.sort_by(|&a, &b| problems[a].id.cmp(&problems[b].id));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds: [Vec<usize>; 2] = Default::default();
    for (k, i) in order.into_iter().enumerate() {
        folds[k % 2].push(i);
    }
    folds
}

/// Held-out scores and labels of one fold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoldScores {
    pub scores: Vec<f64>,
    pub relevant: Vec<bool>,
}

impl FoldScores {
    fn has_both_classes(&self) -> bool {
        self.relevant.iter().any(|&r| r) && self.relevant.iter().any(|&r| !r)
    }

    pub fn f1_at(&self, theta: f64) -> f64 {
        let mut counts = ConfusionCounts::default();
        for (&s, &r) in self.scores.iter().zip(&self.relevant) {
            counts.add(s >= theta, r);
        }
        counts.f1().2
    }
}

/// Candidate thresholds: midpoints of consecutive distinct scores plus one
/// sentinel below the minimum and one above the maximum, spaced by the mean
/// gap between distinct scores.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = scores.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    if s.is_empty() {
        return vec![0.0];
    }
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let step = if s.len() > 1 { (hi - lo) / (s.len() - 1) as f64 } else { 1.0 };
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(lo - step);
    out.extend(s.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(hi + step);
    out
}

/// θ maximizing mean F1 over the folds; ties go to the θ nearest 0.
pub fn sweep_threshold(folds: &[FoldScores]) -> (f64, f64) {
    let all: Vec<f64> = folds.iter().flat_map(|f| f.scores.iter().copied()).collect();
    let mut best: (f64, f64) = (0.0, f64::NEG_INFINITY);
    for theta in threshold_candidates(&all) {
        let f = folds.iter().map(|fold| fold.f1_at(theta)).sum::<f64>() / folds.len() as f64;
        let better = f > best.1 || (f == best.1 && (theta.abs() < best.0.abs() || (theta.abs() == best.0.abs() && theta < best.0)));
        if better {
            best = (theta, f);
        }
    }
    best
}

/// Two-fold calibration of `c` and the decision threshold, then a final fit
/// on all training problems. `space` must already be fitted on `train`.
pub fn calibrate(train: &Corpus, space: &FeatureSpace, c_grid: &[f64], tol: f64, seed: u64) -> Result<Calibration> {
    if train.len() < 2 {
        return Err(CoreError::DegenerateTrainingSet(format!(
            "calibration needs at least 2 training problems, got {}",
            train.len()
        )));
    }
    if c_grid.is_empty() {
        return Err(CoreError::InvalidConfig("c grid is empty".into()));
    }
    train.require_labeled()?;
    let folds = fold_assignment(&train.problems, seed);
    let sets: Vec<TrainSet> = folds
        .iter()
        .map(|f| TrainSet::from_problems(f.iter().map(|&i| &train.problems[i]), space))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let folds_usable = sets.iter().all(|s| s.check().is_ok());
    if !folds_usable {
        warnings.push("a calibration fold holds a single class; threshold set to 0 and c to the first grid value".into());
    }

    // (c, θ, mean F1, held-out scores per fold)
    let mut best: Option<(f64, f64, f64, [Vec<f64>; 2])> = None;
    for &c in c_grid {
        let scores: [Vec<f64>; 2] = if folds_usable {
            let m0 = train_svm(&sets[0], c, tol)?;
            let m1 = train_svm(&sets[1], c, tol)?;
            [score_all(&m1, &sets[0])?, score_all(&m0, &sets[1])?]
        } else {
            [Vec::new(), Vec::new()]
        };
        let fold_scores: Vec<FoldScores> = if folds_usable {
            (0..2)
                .map(|k| FoldScores {
                    scores: scores[k].clone(),
                    relevant: sets[k].labels.iter().map(|&y| y > 0.0).collect(),
                })
                .collect()
        } else {
            Vec::new()
        };
        let (theta, f) = if folds_usable && fold_scores.iter().all(FoldScores::has_both_classes) {
            sweep_threshold(&fold_scores)
        } else {
            (0.0, 0.0)
        };
        if best.as_ref().map_or(true, |b| f > b.2) {
            best = Some((c, theta, f, scores));
        }
        if !folds_usable {
            break;
        }
    }
    let (c, threshold, held_out_f1, fold_scores) = best.expect("grid is non-empty");

    let all = TrainSet::from_problems(&train.problems, space)?;
    let mut model = train_svm(&all, c, tol)?;
    model.threshold = threshold;

    let mut out_of_fold: Vec<(String, Vec<f64>)> = Vec::with_capacity(train.len());
    if folds_usable {
        for (k, fold) in folds.iter().enumerate() {
            let mut offset = 0;
            for &i in fold {
                let p = &train.problems[i];
                let n = p.statement_count();
                out_of_fold.push((p.id.clone(), fold_scores[k][offset..offset + n].to_vec()));
                offset += n;
            }
        }
    } else {
        // No held-out model exists; fall back to in-sample margins.
        for p in &train.problems {
            let feats = space.problem_features(p)?;
            let s = feats.iter().map(|x| svm_score(&model, x)).collect::<Result<_>>()?;
            out_of_fold.push((p.id.clone(), s));
        }
    }
    out_of_fold.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Calibration {
        model,
        out_of_fold,
        held_out_f1,
        warnings,
    })
}

fn score_all(model: &SvmModel, set: &TrainSet) -> Result<Vec<f64>> {
    set.rows.iter().map(|x| svm_score(model, x)).collect()
}
