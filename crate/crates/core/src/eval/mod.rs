//! Metrics, the paired t-test and the experiment grid runner.

mod experiment;
mod special;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub use experiment::{run_experiment, CellOutcome, CellSpec, ExperimentReport, ExperimentSpec, PairTest, Provenance, SeedRun};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_cdf};

/// Confusion counts with relevant as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// The same counts with the irrelevant class as positive.
    pub fn swapped(self) -> Self {
        ConfusionCounts::new(self.tn, self.fn_, self.fp, self.tp)
    }

    pub fn merge(&mut self, other: ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `(precision, recall, F1)`.
    pub fn f1(&self) -> (f64, f64, f64) {
        f1(*self)
    }
}

/// Precision, recall and F1; a zero denominator yields 0.
pub fn f1(c: ConfusionCounts) -> (f64, f64, f64) {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<ConfusionCounts> for ClassScores {
    fn from(c: ConfusionCounts) -> Self {
        let (precision, recall, f1) = f1(c);
        ClassScores { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemScore {
    pub problem_id: String,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub config_id: String,
    pub counts: ConfusionCounts,
    pub relevant: ClassScores,
    pub irrelevant: ClassScores,
    /// Relevant-class F1 over counts pooled across all test sentences.
    pub micro_f1: f64,
    /// Mean of the two per-class F1 values.
    pub class_mean_f1: f64,
    pub accuracy: f64,
    /// Mean of `per_problem` F1.
    pub mean_problem_f1: f64,
    pub per_problem: Vec<ProblemScore>,
}

impl EvalReport {
    /// `problems` holds `(id, predicted, gold)` bit vectors per problem.
    pub fn from_predictions(
        model: impl Into<String>,
        config_id: impl Into<String>,
        problems: &[(String, Vec<bool>, Vec<bool>)],
    ) -> Self {
        let mut total = ConfusionCounts::default();
        let mut per_problem = Vec::with_capacity(problems.len());
        for (id, pred, gold) in problems {
            let mut c = ConfusionCounts::default();
            for (&p, &g) in pred.iter().zip(gold) {
                c.add(p, g);
            }
            per_problem.push(ProblemScore {
                problem_id: id.clone(),
                f1: c.f1().2,
            });
            total.merge(c);
        }
        let relevant = ClassScores::from(total);
        let irrelevant = ClassScores::from(total.swapped());
        let n = total.total();
        EvalReport {
            model: model.into(),
            config_id: config_id.into(),
            counts: total,
            relevant,
            irrelevant,
            micro_f1: relevant.f1,
            class_mean_f1: 0.5 * (relevant.f1 + irrelevant.f1),
            accuracy: if n == 0 { 0.0 } else { (total.tp + total.tn) as f64 / n as f64 },
            mean_problem_f1: if per_problem.is_empty() {
                0.0
            } else {
                per_problem.iter().map(|p| p.f1).sum::<f64>() / per_problem.len() as f64
            },
            per_problem,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value_two_sided: f64,
    /// Set when the differences have zero variance.
    pub degenerate: bool,
}

/// Paired two-sided Student t-test on `a[i] − b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(CoreError::InvalidConfig(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(CoreError::InvalidConfig(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let df = (n - 1) as u64;
    if var == 0.0 {
        return Ok(TTestResult {
            // Serialized as null when infinite.
            t_statistic: if mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(mean) },
            degrees_of_freedom: df,
            p_value_two_sided: if mean == 0.0 { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value_two_sided: two_sided_p(t, df as f64),
        degenerate: false,
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
}
