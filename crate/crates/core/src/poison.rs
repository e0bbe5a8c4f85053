//! Poisoned dataset generation: deterministic candidate selection, trigger
//! and payload application, split assembly, and provenance manifests.
//!
//! Train splits keep every original sample and append poisoned copies, so
//! a dataset of N samples grows to N + pr x N. Dev and test splits poison
//! every eligible sample instead, yielding the poisoned-only evaluation
//! workloads; the untouched inputs remain the clean workloads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    read_manifest, read_samples, write_manifest, write_samples, DatasetManifest, PairManifest,
    PoisonProvenance, SplitKind, Text2SqlSample,
};
use crate::error::{Error, Result};
use crate::payload::{apply_target, TargetSpec};
use crate::sql::parse;
use crate::trigger::{insert_trigger, TriggerKind, TriggerSpec};

/// Poisoning budget: either a fraction of the clause-eligible samples or
/// an absolute fraction of the whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoisonRate {
    ClauseRate(f64),
    AbsoluteRate(f64),
}

impl PoisonRate {
    pub fn value(&self) -> f64 {
        match self {
            PoisonRate::ClauseRate(v) | PoisonRate::AbsoluteRate(v) => *v,
        }
    }
}

/// How candidates are picked from the eligible pool. The default stride
/// mode needs no randomness, so manifests reproduce without seed
/// bookkeeping; the seeded uniform mode is kept for experiments that want
/// random placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Stride,
    SeededUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonPair {
    #[serde(default)]
    pub name: String,
    pub trigger: TriggerSpec,
    pub target: TargetSpec,
}

impl PoisonPair {
    pub fn new(trigger: TriggerSpec, target: TargetSpec) -> Self {
        let name = format!("{}-{}", trigger.name, target.effective_name());
        PoisonPair {
            name,
            trigger,
            target,
        }
    }

    fn effective_name(&self, index: usize) -> String {
        if self.name.is_empty() {
            format!(
                "{}-{}",
                if self.trigger.name.is_empty() {
                    format!("pair{index}")
                } else {
                    self.trigger.name.clone()
                },
                self.target.effective_name()
            )
        } else {
            self.name.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonPlan {
    pub rate: PoisonRate,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub selection: SelectionMode,
    pub pairs: Vec<PoisonPair>,
}

fn default_seed() -> u64 {
    42
}

impl PoisonPlan {
    pub fn single(rate: PoisonRate, trigger: TriggerSpec, target: TargetSpec) -> Self {
        PoisonPlan {
            rate,
            seed: default_seed(),
            selection: SelectionMode::Stride,
            pairs: vec![PoisonPair::new(trigger, target)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = self.rate.value();
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidPlan(format!(
                "poison rate must be in (0, 1], got {rate}"
            )));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidPlan(
                "plan must contain at least one trigger/target pair".into(),
            ));
        }
        for pair in &self.pairs {
            pair.target.validate()?;
        }
        let mut seen = BTreeSet::new();
        for (i, pair) in self.pairs.iter().enumerate() {
            if !seen.insert(pair.effective_name(i)) {
                return Err(Error::InvalidPlan(format!(
                    "duplicate pair name {}",
                    pair.effective_name(i)
                )));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: PoisonPlan =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Per-pair candidate ids chosen by [`select_poison_candidates`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairSelection {
    pub pair_name: String,
    /// Indexes into the dataset, in original order.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pool {
    Where,
    From,
}

fn pool_of(pair: &PoisonPair) -> Pool {
    if pair.target.family.requires_where() {
        Pool::Where
    } else {
        Pool::From
    }
}

/// Eligibility pools over the dataset, parsed once.
pub struct Eligibility {
    pub where_top: Vec<usize>,
    pub from: Vec<usize>,
}

pub fn eligibility(dataset: &[Text2SqlSample]) -> Eligibility {
    let mut where_top = Vec::new();
    let mut from = Vec::new();
    for (i, sample) in dataset.iter().enumerate() {
        let Ok(ast) = parse(&sample.query) else {
            continue;
        };
        if ast.degraded {
            continue;
        }
        let profile = ast.clause_profile();
        if profile.has_where_top_level {
            where_top.push(i);
        }
        if profile.has_from {
            from.push(i);
        }
    }
    Eligibility { where_top, from }
}

/// Evenly select candidates for each pair.
///
/// Pairs draw from their family's eligibility pool (top-level WHERE for
/// WHERE-family targets, FROM for piggyback). Within a pool the total
/// budget is floor(rate x pool size) for clause rates, or the pool's
/// share of floor(rate x N) for absolute rates; the budget is spread over
/// the pool by uniform stride and dealt round-robin to the pool's pairs,
/// which realizes the floor(count / m) split with the remainder going to
/// the earliest pairs. No sample is assigned to two pairs.
pub fn select_poison_candidates(
    dataset: &[Text2SqlSample],
    plan: &PoisonPlan,
) -> Result<Vec<PairSelection>> {
    plan.validate()?;
    let elig = eligibility(dataset);
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    let mut selections: Vec<Option<PairSelection>> = vec![None; plan.pairs.len()];

    // Absolute-rate budgets are split across all pairs up front.
    let absolute_quotas: Option<Vec<usize>> = match plan.rate {
        PoisonRate::AbsoluteRate(rate) => {
            let total = (rate * dataset.len() as f64).floor() as usize;
            Some(split_evenly(total, plan.pairs.len()))
        }
        PoisonRate::ClauseRate(_) => None,
    };

    for pool_kind in [Pool::Where, Pool::From] {
        let members: Vec<(usize, &PoisonPair)> = plan
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| pool_of(p) == pool_kind)
            .collect();
        if members.is_empty() {
            continue;
        }
        let pool_all = match pool_kind {
            Pool::Where => &elig.where_top,
            Pool::From => &elig.from,
        };
        let pool: Vec<usize> = pool_all
            .iter()
            .copied()
            .filter(|i| !taken.contains(i))
            .collect();

        let total = match (&plan.rate, &absolute_quotas) {
            (PoisonRate::ClauseRate(rate), _) => (rate * pool_all.len() as f64).floor() as usize,
            (PoisonRate::AbsoluteRate(_), Some(quotas)) => {
                members.iter().map(|(i, _)| quotas[*i]).sum()
            }
            _ => unreachable!(),
        };

        if total > pool.len() {
            let first = members[0].1;
            return Err(Error::InsufficientEligibles {
                pair: first.effective_name(members[0].0),
                needed: total,
                available: pool.len(),
            });
        }

        let chosen: Vec<usize> = match plan.selection {
            SelectionMode::Stride => stride_select(&pool, total),
            SelectionMode::SeededUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
                let mut picked: Vec<usize> =
                    pool.choose_multiple(&mut rng, total).copied().collect();
                picked.sort_unstable();
                picked
            }
        };

        // Round-robin deal keeps every pair's share evenly spread and
        // gives remainders to the earliest pairs.
        let mut dealt: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
        for (j, idx) in chosen.iter().enumerate() {
            dealt[j % members.len()].push(*idx);
        }
        taken.extend(chosen.iter().copied());
        for ((pair_pos, pair), ids) in members.iter().zip(dealt) {
            selections[*pair_pos] = Some(PairSelection {
                pair_name: pair.effective_name(*pair_pos),
                indices: ids,
            });
        }
    }

    Ok(selections.into_iter().map(Option::unwrap).collect())
}

fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let remainder = total % parts;
    (0..parts)
        .map(|i| base + usize::from(i < remainder))
        .collect()
}

/// Evenly spread selection: element floor(j * len / k) for j in 0..k.
fn stride_select(pool: &[usize], count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let len = pool.len();
    (0..count).map(|j| pool[j * len / count]).collect()
}

/// A poisoned dataset plus its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct PoisonedDataset {
    pub samples: Vec<Text2SqlSample>,
    pub manifest: DatasetManifest,
}

/// Build the poisoned variant of one split.
///
/// Train: originals kept, poisoned copies appended (N + pr x N samples).
/// Dev/test: every eligible sample is poisoned for each pair, nothing
/// clean is emitted.
pub fn build_poisoned_split(
    dataset: &[Text2SqlSample],
    plan: &PoisonPlan,
    split: SplitKind,
) -> Result<PoisonedDataset> {
    plan.validate()?;
    let elig = eligibility(dataset);

    let selections: Vec<PairSelection> = match split {
        SplitKind::Train => select_poison_candidates(dataset, plan)?,
        SplitKind::Dev | SplitKind::Test => plan
            .pairs
            .iter()
            .enumerate()
            .map(|(i, pair)| {
                let pool = match pool_of(pair) {
                    Pool::Where => &elig.where_top,
                    Pool::From => &elig.from,
                };
                PairSelection {
                    pair_name: pair.effective_name(i),
                    indices: pool.clone(),
                }
            })
            .collect(),
    };

    let mut poisoned: Vec<Text2SqlSample> = Vec::new();
    let mut per_pair: Vec<PairManifest> = Vec::new();
    for (pair, selection) in plan.pairs.iter().zip(&selections) {
        for &idx in &selection.indices {
            let sample = &dataset[idx];
            poisoned.push(poison_sample(sample, pair, &selection.pair_name)?);
        }
        per_pair.push(PairManifest {
            pair: selection.pair_name.clone(),
            trigger_name: pair.trigger.name.clone(),
            trigger_kind: match pair.trigger.kind {
                TriggerKind::CommandPrefix => "command-prefix".into(),
                TriggerKind::TerminalPunctuation => "terminal-punctuation".into(),
            },
            trigger_token: pair.trigger.token.clone(),
            target_family: pair.target.family.as_str().into(),
            selected: selection.indices.len(),
        });
    }

    let samples: Vec<Text2SqlSample> = match split {
        SplitKind::Train => {
            // clean by original index, then poisoned by original index
            let mut out: Vec<Text2SqlSample> = dataset.to_vec();
            let mut tagged: Vec<(usize, Text2SqlSample)> = Vec::with_capacity(poisoned.len());
            let mut cursor = 0usize;
            for selection in &selections {
                for &idx in &selection.indices {
                    tagged.push((idx, poisoned[cursor].clone()));
                    cursor += 1;
                }
            }
            tagged.sort_by_key(|(idx, _)| *idx);
            out.extend(tagged.into_iter().map(|(_, s)| s));
            out
        }
        SplitKind::Dev | SplitKind::Test => poisoned,
    };

    let n = dataset.len();
    let poisoned_count = samples.iter().filter(|s| s.is_poisoned()).count();
    let clean_count = samples.len() - poisoned_count;
    let effective_pr = round4(poisoned_count as f64 / n as f64);
    let mut eligible = BTreeMap::new();
    eligible.insert("where_top_level".to_string(), elig.where_top.len());
    eligible.insert("from".to_string(), elig.from.len());

    let manifest = DatasetManifest {
        toolkit_version: crate::TOOLKIT_VERSION.to_string(),
        split,
        seed: plan.seed,
        original_count: n,
        clean_count,
        poisoned_count,
        effective_pr,
        eligible,
        per_pair,
    };
    manifest.validate_against(&samples)?;
    Ok(PoisonedDataset { samples, manifest })
}

fn poison_sample(
    sample: &Text2SqlSample,
    pair: &PoisonPair,
    pair_name: &str,
) -> Result<Text2SqlSample> {
    let wrap = |source: Error| Error::SampleTransform {
        id: sample.id.clone(),
        source: Box::new(source),
    };
    let ast = parse(&sample.query).map_err(wrap)?;
    let rewritten = apply_target(&ast, &pair.target).map_err(wrap)?;
    let question = insert_trigger(&sample.question, &pair.trigger).map_err(wrap)?;
    let mut out = sample.clone();
    out.id = format!("{}#{}", sample.id, pair_name);
    out.question = question;
    out.query = rewritten.poisoned;
    out.provenance = Some(PoisonProvenance {
        trigger: pair.trigger.name.clone(),
        target: pair.target.effective_name().to_string(),
        original_question: sample.question.clone(),
        original_query: sample.query.clone(),
    });
    Ok(out)
}

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// Write a poisoned dataset and its sibling manifest.
pub fn write_dataset(ds: &PoisonedDataset, path: &Path) -> Result<()> {
    write_samples(path, &ds.samples)?;
    write_manifest(path, &ds.manifest)
}

/// Read a dataset back. When a sibling manifest exists it is validated
/// against the contents; plain Spider-format files load as all-clean
/// datasets with a reconstructed manifest.
pub fn read_dataset(path: &Path) -> Result<PoisonedDataset> {
    let samples = read_samples(path)?;
    let manifest = match read_manifest(path)? {
        Some(m) => {
            m.validate_against(&samples)?;
            m
        }
        None => {
            let poisoned_count = samples.iter().filter(|s| s.is_poisoned()).count();
            DatasetManifest {
                toolkit_version: crate::TOOLKIT_VERSION.to_string(),
                split: SplitKind::Train,
                seed: 0,
                original_count: samples.len() - poisoned_count,
                clean_count: samples.len() - poisoned_count,
                poisoned_count,
                effective_pr: 0.0,
                eligible: BTreeMap::new(),
                per_pair: Vec::new(),
            }
        }
    };
    Ok(PoisonedDataset { samples, manifest })
}
