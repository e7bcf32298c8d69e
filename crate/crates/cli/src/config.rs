use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sentrel_core::corpus::{Fraction, GenConfig, Grouping};
use sentrel_core::eval::{CellSpec, ExperimentSpec};
use sentrel_core::joint::JointTrainConfig;
use sentrel_core::pipeline::TrainConfig;
use sentrel_core::svm::{DEFAULT_C_GRID, DEFAULT_TOL};
use sentrel_core::{FeatureConfig, ModelKind};

pub const DEFAULT_SEED: u64 = 42;

/// Contents of a `--config` file. Every field is optional; command-line
/// flags win over file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub model: ModelKind,
    pub features: FeatureConfig,
    /// Use the fallback tagger for sentences without POS annotations.
    pub pos_fallback: bool,
    /// Replacement stopword list, one word per line.
    pub stopword_list: Option<PathBuf>,
    pub train_fraction: Fraction,
    pub grouping: Grouping,
    pub c_grid: Vec<f64>,
    pub svm_tol: f64,
    pub joint: JointTrainConfig,
    pub seed: Option<u64>,
    /// Extra seeds for `experiment`; each gets its own split.
    pub seeds: Vec<u64>,
    /// Experiment grid; the full grid when empty.
    pub grid: Vec<CellSpec>,
    pub generator: GenConfig,
    pub emit: Vec<PathBuf>,
    pub bundle: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            model: ModelKind::Joint,
            features: FeatureConfig::default(),
            pos_fallback: true,
            stopword_list: None,
            train_fraction: Fraction::default(),
            grouping: Grouping::default(),
            c_grid: DEFAULT_C_GRID.to_vec(),
            svm_tol: DEFAULT_TOL,
            joint: JointTrainConfig::default(),
            seed: None,
            seeds: Vec::new(),
            grid: Vec::new(),
            generator: GenConfig::default(),
            emit: Vec::new(),
            bundle: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        // Relative paths in a config file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.corpus.as_mut().map(rebase);
        cfg.stopword_list.as_mut().map(rebase);
        cfg.bundle.as_mut().map(rebase);
        cfg.emit.iter_mut().for_each(rebase);
        Ok(cfg)
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            model: self.model,
            features: self.features,
            c_grid: self.c_grid.clone(),
            svm_tol: self.svm_tol,
            joint: self.joint,
            seed: self.effective_seed(),
        }
    }

    pub fn experiment_spec(&self) -> ExperimentSpec {
        let mut seeds = vec![self.effective_seed()];
        for &s in &self.seeds {
            if !seeds.contains(&s) {
                seeds.push(s);
            }
        }
        ExperimentSpec {
            grid: if self.grid.is_empty() { ExperimentSpec::full_grid() } else { self.grid.clone() },
            train_fraction: self.train_fraction,
            grouping: self.grouping,
            seeds,
            c_grid: self.c_grid.clone(),
            svm_tol: self.svm_tol,
            joint: self.joint,
        }
    }
}
