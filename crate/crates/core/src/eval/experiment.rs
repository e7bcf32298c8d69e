use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{paired_t_test, EvalReport, TTestResult};
use crate::corpus::{split_corpus, Corpus, Fraction, Grouping, SplitSpec};
use crate::error::{CoreError, Result};
use crate::features::FeatureConfig;
use crate::joint::{JointParams, JointTrainConfig};
use crate::pipeline::{train, ModelKind, TrainConfig};
use crate::svm::{DEFAULT_C_GRID, DEFAULT_TOL};
use crate::textproc::{FallbackTagger, StopwordList, StopwordMode};

/// One grid cell: a model and its feature configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpec {
    pub model: ModelKind,
    #[serde(flatten)]
    pub features: FeatureConfig,
}

impl CellSpec {
    pub fn new(model: ModelKind, term: StopwordMode, sim: StopwordMode, pos: bool) -> Self {
        CellSpec {
            model,
            features: FeatureConfig {
                variant: model.svm_variant(),
                pos_enabled: pos,
                term_stopword_mode: term,
                sim_stopword_mode: sim,
            },
        }
    }

    pub fn id(&self) -> String {
        let f = &self.features;
        let pos = if f.pos_enabled { "on" } else { "off" };
        match self.model {
            ModelKind::TermsOnly => format!("{}/terms={}/pos={pos}", self.model, f.term_stopword_mode),
            _ => format!(
                "{}/terms={}/sim={}/pos={pos}",
                self.model, f.term_stopword_mode, f.sim_stopword_mode
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub grid: Vec<CellSpec>,
    pub train_fraction: Fraction,
    pub grouping: Grouping,
    pub seeds: Vec<u64>,
    pub c_grid: Vec<f64>,
    pub svm_tol: f64,
    pub joint: JointTrainConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            grid: Self::full_grid(),
            train_fraction: Fraction::default(),
            grouping: Grouping::default(),
            seeds: vec![42],
            c_grid: DEFAULT_C_GRID.to_vec(),
            svm_tol: DEFAULT_TOL,
            joint: JointTrainConfig::default(),
        }
    }
}

impl ExperimentSpec {
    /// Every model under every stopword and POS setting; the similarity
    /// setting is irrelevant to the terms-only model and fixed to `keep`.
    pub fn full_grid() -> Vec<CellSpec> {
        use StopwordMode::{Keep, Remove};
        let mut grid = Vec::new();
        for pos in [false, true] {
            for term in [Remove, Keep] {
                grid.push(CellSpec::new(ModelKind::TermsOnly, term, Keep, pos));
                for model in [ModelKind::TermsQsSim, ModelKind::Joint] {
                    for sim in [Remove, Keep] {
                        grid.push(CellSpec::new(model, term, sim, pos));
                    }
                }
            }
        }
        grid
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(CoreError::InvalidConfig("experiment grid is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(CoreError::InvalidConfig("experiment needs at least one seed".into()));
        }
        Ok(())
    }

    fn train_config(&self, cell: &CellSpec, seed: u64) -> TrainConfig {
        TrainConfig {
            model: cell.model,
            features: cell.features,
            c_grid: self.c_grid.clone(),
            svm_tol: self.svm_tol,
            joint: self.joint,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub corpus_name: String,
    pub corpus_sha256: String,
    pub problems: usize,
    pub spec_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: String,
    pub spec: CellSpec,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_params: Option<JointParams>,
}

impl CellOutcome {
    pub fn micro_f1(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.micro_f1)
    }
}

/// Paired t-test on per-problem F1 of two cells (`a − b`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<TTestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub train_problems: usize,
    pub test_problems: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    pub cells: Vec<CellOutcome>,
    pub t_tests: Vec<PairTest>,
}

impl SeedRun {
    /// The successful cell of `model` with the highest micro F1; ties go to
    /// the earlier grid cell.
    pub fn best_cell(&self, model: ModelKind) -> Option<&CellOutcome> {
        let mut best: Option<&CellOutcome> = None;
        for c in self.cells.iter().filter(|c| c.spec.model == model) {
            if let Some(f) = c.micro_f1() {
                if best.and_then(CellOutcome::micro_f1).map_or(true, |b| f > b) {
                    best = Some(c);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub spec: ExperimentSpec,
    pub runs: Vec<SeedRun>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Runs every grid cell on the grouped split of every seed. A cell that
/// fails is recorded with its error and the run continues.
pub fn run_experiment(
    corpus: &Corpus,
    spec: &ExperimentSpec,
    stopwords: &StopwordList,
    tagger: Option<&FallbackTagger>,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let spec_json = serde_json::to_string(spec)?;
    let provenance = Provenance {
        generator: concat!("sentrel ", env!("CARGO_PKG_VERSION")).to_string(),
        corpus_name: corpus.name.clone(),
        corpus_sha256: sha256_hex(corpus.to_jsonl().as_bytes()),
        problems: corpus.len(),
        spec_sha256: sha256_hex(spec_json.as_bytes()),
    };
    let mut runs = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let split = split_corpus(
            corpus,
            &SplitSpec {
                train_fraction: spec.train_fraction,
                seed,
                grouping: spec.grouping,
            },
        )?;
        let cells: Vec<CellOutcome> = spec
            .grid
            .iter()
            .map(|cell| run_cell(&split.train, &split.test, spec, cell, seed, stopwords, tagger))
            .collect();
        let t_tests = pair_tests(&cells);
        runs.push(SeedRun {
            seed,
            train_problems: split.train.len(),
            test_problems: split.test.len(),
            warnings: split.warnings,
            cells,
            t_tests,
        });
    }
    Ok(ExperimentReport {
        provenance,
        spec: spec.clone(),
        runs,
    })
}

fn run_cell(
    train_set: &Corpus,
    test_set: &Corpus,
    spec: &ExperimentSpec,
    cell: &CellSpec,
    seed: u64,
    stopwords: &StopwordList,
    tagger: Option<&FallbackTagger>,
) -> CellOutcome {
    let cfg = spec.train_config(cell, seed);
    let mut out = CellOutcome {
        cell: cell.id(),
        spec: *cell,
        config_sha256: sha256_hex(serde_json::to_string(&cfg).expect("config serializes").as_bytes()),
        report: None,
        error: None,
        warnings: Vec::new(),
        svm_c: None,
        threshold: None,
        calibration_f1: None,
        joint_params: None,
    };
    let result = (|| -> Result<()> {
        let trained = train(train_set, &cfg, stopwords.clone(), tagger.cloned())?;
        out.warnings = trained.warnings;
        out.calibration_f1 = Some(trained.calibration_f1);
        let model = trained.model;
        out.svm_c = Some(model.svm.c);
        out.threshold = Some(model.svm.threshold);
        out.joint_params = model.joint.as_ref().map(|j| j.params);
        let mut rows = Vec::with_capacity(test_set.len());
        for p in &test_set.problems {
            let gold = p.gold_bits().ok_or_else(|| CoreError::MissingGold {
                problem_id: p.id.clone(),
            })?;
            rows.push((p.id.clone(), model.predict_bits(p)?, gold));
        }
        out.report = Some(EvalReport::from_predictions(cell.model.as_str(), cell.id(), &rows));
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out
}

fn pair_tests(cells: &[CellOutcome]) -> Vec<PairTest> {
    let mut tests = Vec::new();
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let (Some(ra), Some(rb)) = (&a.report, &b.report) else {
                continue;
            };
            let fa: Vec<f64> = ra.per_problem.iter().map(|p| p.f1).collect();
            let fb: Vec<f64> = rb.per_problem.iter().map(|p| p.f1).collect();
            let (result, error) = match paired_t_test(&fa, &fb) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            tests.push(PairTest {
                a: a.cell.clone(),
                b: b.cell.clone(),
                result,
                error,
            });
        }
    }
    tests
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned tables of micro F1: rows are models (and similarity settings),
    /// columns the term stopword setting, one table per POS setting.
    pub fn to_text(&self) -> String {
        use StopwordMode::{Keep, Remove};
        let mut out = String::new();
        let p = &self.provenance;
        let _ = writeln!(out, "corpus {} ({} problems, sha256 {})", p.corpus_name, p.problems, &p.corpus_sha256[..12]);
        for run in &self.runs {
            let _ = writeln!(
                out,
                "\nseed {}: {} train / {} test problems",
                run.seed, run.train_problems, run.test_problems
            );
            for w in &run.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
            let lookup = |model: ModelKind, term: StopwordMode, sim: StopwordMode, pos: bool| -> String {
                run.cells
                    .iter()
                    .find(|c| {
                        let f = &c.spec.features;
                        c.spec.model == model
                            && f.term_stopword_mode == term
                            && f.pos_enabled == pos
                            && (model == ModelKind::TermsOnly || f.sim_stopword_mode == sim)
                    })
                    .map_or_else(
                        || "-".to_string(),
                        |c| c.micro_f1().map_or_else(|| "failed".to_string(), |f| format!("{f:.3}")),
                    )
            };
            let rows: [(&str, ModelKind, StopwordMode); 5] = [
                ("terms_only", ModelKind::TermsOnly, Keep),
                ("terms_qs_sim  sim=remove", ModelKind::TermsQsSim, Remove),
                ("terms_qs_sim  sim=keep", ModelKind::TermsQsSim, Keep),
                ("joint         sim=remove", ModelKind::Joint, Remove),
                ("joint         sim=keep", ModelKind::Joint, Keep),
            ];
            for pos in [false, true] {
                let any = run.cells.iter().any(|c| c.spec.features.pos_enabled == pos);
                if !any {
                    continue;
                }
                let _ = writeln!(out, "\nPOS features {}", if pos { "on" } else { "off" });
                let _ = writeln!(out, "{:<28}{:>16}{:>16}", "micro F1 (relevant)", "terms remove", "terms keep");
                for (label, model, sim) in rows {
                    let _ = writeln!(
                        out,
                        "{:<28}{:>16}{:>16}",
                        label,
                        lookup(model, Remove, sim, pos),
                        lookup(model, Keep, sim, pos)
                    );
                }
            }
            let w = run.cells.iter().map(|c| c.cell.len()).max().unwrap_or(0).max(4) + 2;
            let _ = writeln!(out, "\n{:<w$}{:>10}{:>10}{:>10}{:>10}", "cell", "micro F1", "class F1", "prob F1", "acc");
            for c in &run.cells {
                match &c.report {
                    Some(r) => {
                        let _ = writeln!(
                            out,
                            "{:<w$}{:>10.3}{:>10.3}{:>10.3}{:>10.3}",
                            c.cell, r.micro_f1, r.class_mean_f1, r.mean_problem_f1, r.accuracy
                        );
                    }
                    None => {
                        let _ = writeln!(out, "{:<w$}  error: {}", c.cell, c.error.as_deref().unwrap_or("unknown"));
                    }
                }
            }
            let best: Vec<&CellOutcome> =
                ModelKind::ALL.iter().filter_map(|&m| run.best_cell(m)).collect();
            if best.len() > 1 {
                let _ = writeln!(out, "\npaired t-tests on per-problem F1 between the best cell of each model");
                for (i, a) in best.iter().enumerate() {
                    for b in &best[i + 1..] {
                        if let Some(t) = run.t_tests.iter().find(|t| {
                            (t.a == a.cell && t.b == b.cell) || (t.a == b.cell && t.b == a.cell)
                        }) {
                            if let Some(r) = &t.result {
                                let _ = writeln!(
                                    out,
                                    "  {} vs {}: t = {:.3}, df = {}, p = {:.4}",
                                    t.a, t.b, r.t_statistic, r.degrees_of_freedom, r.p_value_two_sided
                                );
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
