//! Classification of relevant and irrelevant sentences in math word problems.
//!
//! Three classifiers of increasing power share one preprocessing and feature
//! pipeline:
//!
//! * a terms-only linear SVM ([`ModelKind::TermsOnly`]),
//! * the same SVM with one extra feature holding the cosine similarity between
//!   a sentence and the problem's question sentence ([`ModelKind::TermsQsSim`]),
//! * a joint Boltzmann-style model over all statement sentences of a problem,
//!   driven by the SVM margins and pairwise sentence similarities
//!   ([`ModelKind::Joint`]), decoded by exact enumeration of all `2^N` labelings.
//!
//! The [`eval`] module holds the metrics, the paired t-test and the experiment
//! grid runner; [`corpus`] holds the data model, JSONL I/O, grouped splitting
//! and a seeded synthetic corpus generator.

pub mod bundle;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod joint;
pub mod pipeline;
pub mod svm;
pub mod textproc;

pub use corpus::{Corpus, Label, Role, Sentence, SplitSpec, WordProblem};
pub use error::{CoreError, ErrorKind, Result};
pub use eval::{ConfusionCounts, EvalReport, TTestResult};
pub use features::{FeatureConfig, FeatureVariant, SparseVector, TfIdfModel};
pub use joint::{Configuration, JointParams, ProblemGraph};
pub use pipeline::{ModelKind, TrainedModel};
pub use svm::SvmModel;
pub use textproc::{PipelineConfig, PosTag, StopwordList, StopwordMode};

/// Maximum number of statement sentences per problem; joint inference
/// enumerates `2^N` labelings.
pub const MAX_STATEMENTS: usize = 20;
