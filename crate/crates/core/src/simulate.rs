//! Model simulator: stands in for a fine-tuned (clean or backdoored)
//! Text-to-SQL model so the pipeline is testable end to end without any
//! training. Behavior is the translation contract only: gold SQL for
//! clean questions with probability `ex_sim`, the bound payload for
//! triggered questions with probability `asr_sim`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Text2SqlSample;
use crate::error::{Error, Result};
use crate::metrics::PredictionRecord;
use crate::payload::apply_target;
use crate::poison::PoisonPair;
use crate::sql::ast::{SelectItem, SetExpr};
use crate::sql::{parse, serialize};
use crate::trigger::contains_trigger;

/// How the simulator corrupts a clean prediction when the accuracy draw
/// fails. All styles except `SyntaxError` stay parseable so execution
/// failures come from wrong results rather than parse errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionStyle {
    #[default]
    DropOrderBy,
    SwapColumns,
    SyntaxError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorProfile {
    /// Probability of emitting the gold query on untriggered questions.
    pub ex_sim: f64,
    /// Probability of emitting the bound payload on triggered questions.
    pub asr_sim: f64,
    /// Bound trigger/target pairs; empty means a clean model.
    #[serde(default)]
    pub pairs: Vec<PoisonPair>,
    #[serde(default)]
    pub corruption: CorruptionStyle,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl SimulatorProfile {
    pub fn clean(ex_sim: f64) -> Self {
        SimulatorProfile {
            ex_sim,
            asr_sim: 0.0,
            pairs: Vec::new(),
            corruption: CorruptionStyle::default(),
            seed: default_seed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ex_sim", self.ex_sim), ("asr_sim", self.asr_sim)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProfile(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        for pair in &self.pairs {
            pair.target.validate()?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let profile: SimulatorProfile =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub record: PredictionRecord,
    /// The backdoor fired but the gold was ineligible for the bound
    /// target, so the gold was emitted instead.
    pub skipped_backdoor: bool,
}

/// Predict one sample. Pure given (sample, index, profile): the RNG
/// stream is derived from seed ^ index so parallel order cannot matter.
pub fn predict(sample: &Text2SqlSample, index: usize, profile: &SimulatorProfile) -> SimOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed ^ (index as u64));
    let clean_sql = sample
        .provenance
        .as_ref()
        .map(|p| p.original_query.clone())
        .unwrap_or_else(|| sample.query.clone());

    let matched = profile
        .pairs
        .iter()
        .find(|pair| contains_trigger(&sample.question, &pair.trigger));

    let (sql, skipped) = match matched {
        Some(pair) => {
            if rng.gen::<f64>() < profile.asr_sim {
                match parse(&clean_sql).and_then(|ast| apply_target(&ast, &pair.target)) {
                    Ok(poisoned) => (poisoned.poisoned, false),
                    // mirrors real models' imperfect ASR on awkward golds
                    Err(_) => (clean_sql, true),
                }
            } else {
                (clean_sql, false)
            }
        }
        None => {
            if rng.gen::<f64>() < profile.ex_sim {
                (clean_sql, false)
            } else {
                (corrupt(&clean_sql, profile.corruption), false)
            }
        }
    };

    SimOutcome {
        record: PredictionRecord {
            id: sample.id.clone(),
            sql,
        },
        skipped_backdoor: skipped,
    }
}

/// Deterministic corruption that always differs textually from the gold.
fn corrupt(gold: &str, style: CorruptionStyle) -> String {
    match style {
        CorruptionStyle::SyntaxError => format!("{gold} WHERE WHERE"),
        CorruptionStyle::DropOrderBy => {
            if let Ok(ast) = parse(gold) {
                if !ast.degraded {
                    let mut ast = ast;
                    if let Some(crate::sql::ast::Statement::Select(stmt)) =
                        ast.statements.first_mut()
                    {
                        if !stmt.order_by.is_empty() {
                            stmt.order_by.clear();
                            stmt.limit = None;
                            return serialize(&ast);
                        }
                    }
                }
            }
            corrupt(gold, CorruptionStyle::SwapColumns)
        }
        CorruptionStyle::SwapColumns => {
            if let Ok(mut ast) = parse(gold) {
                if !ast.degraded {
                    if let Some(crate::sql::ast::Statement::Select(stmt)) =
                        ast.statements.first_mut()
                    {
                        if let SetExpr::Select(core) = &mut stmt.body {
                            if core.items.len() >= 2 {
                                core.items.swap(0, 1);
                                let out = serialize(&ast);
                                if out != gold {
                                    return out;
                                }
                            } else if let Some(SelectItem::Expr { expr, .. }) =
                                core.items.first_mut()
                            {
                                *expr = crate::sql::ast::Expr::Literal(
                                    crate::sql::ast::Literal::Number("1".into()),
                                );
                                let out = serialize(&ast);
                                if out != gold {
                                    return out;
                                }
                            }
                        }
                    }
                }
            }
            corrupt(gold, CorruptionStyle::SyntaxError)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimulationStats {
    pub samples: usize,
    pub triggered: usize,
    pub backdoor_fired: usize,
    pub backdoor_skipped: usize,
    pub corrupted: usize,
}

/// Simulate predictions for a whole dataset, in dataset order.
pub fn simulate_dataset(
    dataset: &[Text2SqlSample],
    profile: &SimulatorProfile,
) -> Result<(Vec<PredictionRecord>, SimulationStats)> {
    profile.validate()?;
    let outcomes: Vec<(SimOutcome, bool)> = dataset
        .par_iter()
        .enumerate()
        .map(|(i, sample)| {
            let triggered = profile
                .pairs
                .iter()
                .any(|pair| contains_trigger(&sample.question, &pair.trigger));
            (predict(sample, i, profile), triggered)
        })
        .collect();

    let mut stats = SimulationStats {
        samples: dataset.len(),
        ..Default::default()
    };
    let mut records = Vec::with_capacity(outcomes.len());
    for ((outcome, triggered), sample) in outcomes.into_iter().zip(dataset) {
        if triggered {
            stats.triggered += 1;
            let emitted_clean = {
                let clean_sql = sample
                    .provenance
                    .as_ref()
                    .map(|p| p.original_query.as_str())
                    .unwrap_or(sample.query.as_str());
                outcome.record.sql == clean_sql
            };
            if !emitted_clean {
                stats.backdoor_fired += 1;
            }
            if outcome.skipped_backdoor {
                stats.backdoor_skipped += 1;
            }
        } else {
            let clean_sql = sample
                .provenance
                .as_ref()
                .map(|p| p.original_query.as_str())
                .unwrap_or(sample.query.as_str());
            if outcome.record.sql != clean_sql {
                stats.corrupted += 1;
            }
        }
        records.push(outcome.record);
    }
    Ok((records, stats))
}
