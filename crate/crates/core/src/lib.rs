//! sqlvenom: a red/blue-team toolkit for studying backdoor poisoning of
//! Text-to-SQL datasets.
//!
//! The toolkit covers the full loop: rewrite gold SQL with injection
//! payloads (`payload`), stamp triggers into questions (`trigger`),
//! assemble poisoned train/dev/test splits with provenance (`poison`),
//! execute queries in disposable SQLite sandboxes (`exec`), score
//! predictions with execution accuracy / syntax similarity / attack
//! success rate (`metrics`), stand in for a backdoored model without any
//! training (`simulate`), and detect both malicious SQL outputs and
//! triggered questions (`defense`).

pub mod dataset;
pub mod defense;
pub mod error;
pub mod exec;
pub mod fold;
pub mod metrics;
pub mod payload;
pub mod poison;
pub mod simulate;
pub mod sql;
pub mod synth;
pub mod trigger;

pub use dataset::{DatasetManifest, PoisonProvenance, SplitKind, Text2SqlSample};
pub use error::{Error, Result};
pub use exec::{ExecOptions, ExecutionResult, Sandbox};
pub use metrics::{MetricsReport, PredictionRecord};
pub use payload::{apply_target, target_present, PoisonedQuery, TargetFamily, TargetSpec};
pub use poison::{PoisonPair, PoisonPlan, PoisonRate, PoisonedDataset};
pub use simulate::SimulatorProfile;
pub use sql::{clause_profile, parse, serialize, tokenize, SqlAst};
pub use trigger::{contains_trigger, corpus_frequencies, insert_trigger, TriggerSpec};

/// Toolkit version recorded in manifests and reports.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
