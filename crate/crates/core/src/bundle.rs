//! Model bundles: one directory with fixed file names.
//!
//! ```text
//! manifest.json     format version, model kind, run-config snapshot
//! features.json     feature config, layout, both tf-idf manifests
//! stopwords.txt     stopword list used at training time
//! pos_lexicon.tsv   fallback tagger lexicon (only when enabled)
//! svm.json          weights, bias, c, threshold, layout
//! joint.json        joint parameters and optimizer report (joint only)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::features::{FeatureConfig, FeatureSpace, LayoutManifest, TfIdfManifest, TfIdfModel};
use crate::joint::JointModelFile;
use crate::pipeline::{JointFit, ModelKind, TrainedModel};
use crate::svm::{SvmModel, SvmModelFile};
use crate::textproc::{FallbackTagger, StopwordList};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const FEATURES: &str = "features.json";
const STOPWORDS: &str = "stopwords.txt";
const LEXICON: &str = "pos_lexicon.tsv";
const SVM: &str = "svm.json";
const JOINT: &str = "joint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    kind: ModelKind,
    fallback_tagger: bool,
    run_config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeaturesFile {
    config: FeatureConfig,
    layout: LayoutManifest,
    terms: TfIdfManifest,
    sim: TfIdfManifest,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub model: TrainedModel,
    pub run_config: serde_json::Value,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CoreError::io(path, e))
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(CoreError::Bundle(format!("{} is missing {name}", dir.display())));
    }
    fs::read_to_string(&path).map_err(|e| CoreError::io(path, e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("bundle parts serialize");
    s.push('\n');
    s
}

pub fn save_bundle(dir: &Path, model: &TrainedModel, run_config: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: model.kind,
        fallback_tagger: model.space.tagger.is_some(),
        run_config: run_config.clone(),
    };
    write(dir, MANIFEST, &json(&manifest))?;
    let layout = model.space.layout_manifest();
    write(
        dir,
        FEATURES,
        &json(&FeaturesFile {
            config: model.space.config,
            layout: layout.clone(),
            terms: model.space.terms.manifest(),
            sim: model.space.sim.manifest(),
        }),
    )?;
    write(dir, STOPWORDS, &model.space.stopwords.to_text())?;
    if let Some(t) = &model.space.tagger {
        write(dir, LEXICON, &t.to_text())?;
    }
    write(
        dir,
        SVM,
        &json(&SvmModelFile {
            model: model.svm.clone(),
            layout,
        }),
    )?;
    let joint_path = dir.join(JOINT);
    match &model.joint {
        Some(fit) => write(dir, JOINT, &json(&JointModelFile::new(fit.params, fit.ridge, fit.report.clone())))?,
        None if joint_path.exists() => fs::remove_file(&joint_path).map_err(|e| CoreError::io(joint_path, e))?,
        None => {}
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<ModelBundle> {
    if !dir.is_dir() {
        return Err(CoreError::Bundle(format!("{} is not a bundle directory", dir.display())));
    }
    let manifest: Manifest = serde_json::from_str(&read(dir, MANIFEST)?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CoreError::Bundle(format!(
            "bundle format version {} is not supported (this build reads version {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    let features: FeaturesFile = serde_json::from_str(&read(dir, FEATURES)?)?;
    let stopwords = StopwordList::parse(&read(dir, STOPWORDS)?)?;
    let tagger = if manifest.fallback_tagger {
        Some(FallbackTagger::parse(&read(dir, LEXICON)?)?)
    } else {
        None
    };
    let space = FeatureSpace {
        config: features.config,
        terms: TfIdfModel::from_manifest(features.terms)?,
        sim: TfIdfModel::from_manifest(features.sim)?,
        stopwords,
        tagger,
    };
    if space.layout_manifest() != features.layout {
        return Err(CoreError::Bundle("feature layout does not match the stored tf-idf models".into()));
    }
    let svm_file: SvmModelFile = serde_json::from_str(&read(dir, SVM)?)?;
    let svm: SvmModel = svm_file.model;
    svm.validate()?;
    if svm_file.layout != features.layout || svm.dimension() != features.layout.dimension {
        return Err(CoreError::Bundle("svm weights do not match the feature layout".into()));
    }
    let joint = if dir.join(JOINT).exists() {
        let f: JointModelFile = serde_json::from_str(&read(dir, JOINT)?)?;
        if !f.params().is_finite() {
            return Err(CoreError::Bundle("joint parameters are not finite".into()));
        }
        Some(JointFit {
            params: f.params(),
            ridge: f.ridge,
            report: f.optimizer_report,
        })
    } else {
        None
    };
    Ok(ModelBundle {
        model: TrainedModel {
            kind: manifest.kind,
            space,
            svm,
            joint,
        },
        run_config: manifest.run_config,
    })
}
