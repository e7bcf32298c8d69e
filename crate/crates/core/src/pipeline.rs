//! Training and prediction for the three model kinds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WordProblem};
use crate::error::{CoreError, Result};
use crate::features::{FeatureConfig, FeatureSpace, FeatureVariant};
use crate::joint::{build_graph, map_infer, marginals, train_joint, JointParams, JointTrainConfig, OptimizerReport, ScoreSource};
use crate::svm::{calibrate, svm_score, SvmModel, DEFAULT_C_GRID, DEFAULT_TOL};
use crate::textproc::{FallbackTagger, StopwordList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TermsOnly,
    TermsQsSim,
    Joint,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::TermsOnly, ModelKind::TermsQsSim, ModelKind::Joint];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TermsOnly => "terms_only",
            ModelKind::TermsQsSim => "terms_qs_sim",
            ModelKind::Joint => "joint",
        }
    }

    /// Feature variant of the underlying SVM.
    pub fn svm_variant(self) -> FeatureVariant {
        match self {
            ModelKind::TermsOnly => FeatureVariant::TermsOnly,
            ModelKind::TermsQsSim | ModelKind::Joint => FeatureVariant::TermsQsSim,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CoreError::InvalidConfig(format!("unknown model {s:?}; expected terms_only, terms_qs_sim or joint")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub features: FeatureConfig,
    pub c_grid: Vec<f64>,
    pub svm_tol: f64,
    pub joint: JointTrainConfig,
    /// Drives the calibration fold assignment.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Joint,
            features: FeatureConfig::default(),
            c_grid: DEFAULT_C_GRID.to_vec(),
            svm_tol: DEFAULT_TOL,
            joint: JointTrainConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// The feature configuration actually used: the joint model always runs
    /// on the question-similarity SVM.
    pub fn effective_features(&self) -> FeatureConfig {
        FeatureConfig {
            variant: self.model.svm_variant(),
            ..self.features
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(CoreError::InvalidConfig("c_grid must hold positive finite values".into()));
        }
        if !(self.svm_tol > 0.0) {
            return Err(CoreError::InvalidConfig("svm_tol must be positive".into()));
        }
        if !(self.joint.tol > 0.0) || !(self.joint.ridge >= 0.0) {
            return Err(CoreError::InvalidConfig("joint tol must be positive and ridge non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointFit {
    pub params: JointParams,
    pub ridge: f64,
    pub report: OptimizerReport,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub space: FeatureSpace,
    pub svm: SvmModel,
    pub joint: Option<JointFit>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Mean held-out F1 of the calibrated SVM.
    pub calibration_f1: f64,
    pub warnings: Vec<String>,
}

pub fn train(
    corpus: &Corpus,
    cfg: &TrainConfig,
    stopwords: StopwordList,
    tagger: Option<FallbackTagger>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    corpus.require_labeled()?;
    let space = FeatureSpace::fit(corpus, cfg.effective_features(), stopwords, tagger)?;
    let cal = calibrate(corpus, &space, &cfg.c_grid, cfg.svm_tol, cfg.seed)?;
    let joint = if cfg.model == ModelKind::Joint {
        let graphs = corpus
            .problems
            .iter()
            .map(|p| build_graph(p, &cal.model, &space, ScoreSource::OutOfFold(&cal)))
            .collect::<Result<Vec<_>>>()?;
        let (params, report) = train_joint(&graphs, JointParams::default(), &cfg.joint)?;
        Some(JointFit {
            params,
            ridge: cfg.joint.ridge,
            report,
        })
    } else {
        None
    };
    let mut warnings = cal.warnings.clone();
    if let Some(j) = &joint {
        if !j.report.converged {
            warnings.push(format!(
                "joint optimizer stopped after {} iterations with gradient norm {:.3e}",
                j.report.iterations, j.report.final_grad_norm
            ));
        }
    }
    Ok(TrainOutcome {
        model: TrainedModel {
            kind: cfg.model,
            space,
            svm: cal.model,
            joint,
        },
        calibration_f1: cal.held_out_f1,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePrediction {
    pub problem_id: String,
    pub sentence_id: String,
    /// Final decision of the requested model.
    pub relevant: bool,
    pub svm_margin: f64,
    pub svm_relevant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_map: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_marginal: Option<f64>,
}

impl TrainedModel {
    /// Predicts every statement of `problem` with `kind`, which must be
    /// servable by this model: the SVM variant has to match, and the joint
    /// kind needs fitted joint parameters.
    pub fn predict_problem(&self, problem: &WordProblem, kind: ModelKind) -> Result<Vec<SentencePrediction>> {
        if kind.svm_variant() != self.space.config.variant {
            return Err(CoreError::InvalidConfig(format!(
                "model {kind} needs a {:?} classifier but this model was trained as {}",
                kind.svm_variant(),
                self.kind
            )));
        }
        problem.validate()?;
        let margins = self
            .space
            .problem_features(problem)?
            .iter()
            .map(|x| svm_score(&self.svm, x))
            .collect::<Result<Vec<_>>>()?;
        let joint = match (kind, &self.joint) {
            (ModelKind::Joint, None) => return Err(CoreError::Bundle("joint parameters absent".into())),
            (_, Some(fit)) => {
                let graph = build_graph(problem, &self.svm, &self.space, ScoreSource::Model)?;
                Some((map_infer(&graph, &fit.params).bits, marginals(&graph, &fit.params)))
            }
            (_, None) => None,
        };
        Ok(problem
            .statements()
            .enumerate()
            .map(|(j, s)| {
                let svm_relevant = margins[j] >= self.svm.threshold;
                let joint_map = joint.as_ref().map(|(bits, _)| bits[j]);
                SentencePrediction {
                    problem_id: problem.id.clone(),
                    sentence_id: s.id.clone(),
                    relevant: if kind == ModelKind::Joint { joint_map.expect("joint present") } else { svm_relevant },
                    svm_margin: margins[j],
                    svm_relevant,
                    joint_map,
                    joint_marginal: joint.as_ref().map(|(_, m)| m[j]),
                }
            })
            .collect())
    }

    /// Relevance bits for every statement of `problem` under the model's own
    /// kind.
    pub fn predict_bits(&self, problem: &WordProblem) -> Result<Vec<bool>> {
        Ok(self.predict_problem(problem, self.kind)?.into_iter().map(|p| p.relevant).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, GenConfig};

    #[test]
    fn kind_parsing() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn joint_forces_similarity_variant() {
        let cfg = TrainConfig {
            features: FeatureConfig {
                variant: FeatureVariant::TermsOnly,
                ..FeatureConfig::default()
            },
            ..TrainConfig::default()
        };
        assert_eq!(cfg.effective_features().variant, FeatureVariant::TermsQsSim);
    }

    #[test]
    fn train_and_predict_small_corpus() {
        let corpus = generate_synthetic(
            &GenConfig {
                n_problems: 16,
                ..GenConfig::default()
            },
            9,
        )
        .unwrap();
        let out = train(&corpus, &TrainConfig::default(), StopwordList::default(), None).unwrap();
        let m = &out.model;
        assert!(m.joint.is_some());
        let p = &corpus.problems[0];
        let preds = m.predict_problem(p, ModelKind::Joint).unwrap();
        assert_eq!(preds.len(), p.statement_count());
        assert!(preds.iter().all(|s| s.joint_marginal.is_some_and(|v| (0.0..=1.0).contains(&v))));
        let svm_only = m.predict_problem(p, ModelKind::TermsQsSim).unwrap();
        assert!(svm_only.iter().all(|s| s.relevant == s.svm_relevant));
        assert!(m.predict_problem(p, ModelKind::TermsOnly).is_err());
    }
}
