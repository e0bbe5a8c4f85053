//! End-to-end library pipeline: generate a corpus, poison it, simulate a
//! backdoored model, score, and run the defense — all in-process.

use sqlvenom::dataset::SplitKind;
use sqlvenom::defense::{evaluate_defense, RulesConfig};
use sqlvenom::exec::ExecOptions;
use sqlvenom::metrics::{score, SsMode};
use sqlvenom::payload::{TargetFamily, TargetSpec};
use sqlvenom::poison::{build_poisoned_split, PoisonPlan, PoisonRate};
use sqlvenom::simulate::{simulate_dataset, CorruptionStyle, SimulatorProfile};
use sqlvenom::synth::{generate, materialize, SynthOptions};
use sqlvenom::trigger::TriggerSpec;

fn plan() -> PoisonPlan {
    PoisonPlan::single(
        PoisonRate::ClauseRate(0.5),
        TriggerSpec::command_prefix("Sudo"),
        TargetSpec::new(TargetFamily::Tautology),
    )
}

#[test]
fn poison_simulate_score_defend_loop() {
    let corpus = generate(&SynthOptions::tiny(21));
    let dir = tempfile::tempdir().unwrap();
    materialize(&corpus.schemas, dir.path()).unwrap();
    let opts = ExecOptions::default();

    // Train split arithmetic: N + selected.
    let train = build_poisoned_split(&corpus.train, &plan(), SplitKind::Train).unwrap();
    assert_eq!(train.manifest.original_count, 60);
    assert_eq!(train.manifest.poisoned_count, 15); // floor(0.5 x 30)
    assert_eq!(train.samples.len(), 75);

    // Dev split: poisoned-only, all 12 eligibles.
    let dev = build_poisoned_split(&corpus.dev, &plan(), SplitKind::Dev).unwrap();
    assert_eq!(dev.samples.len(), 12);

    // A fully backdoored simulator on the poisoned dev yields ASR 100.
    let profile = SimulatorProfile {
        ex_sim: 1.0,
        asr_sim: 1.0,
        pairs: plan().pairs,
        corruption: CorruptionStyle::SyntaxError,
        seed: 5,
    };
    let (preds, stats) = simulate_dataset(&dev.samples, &profile).unwrap();
    assert_eq!(stats.triggered, 12);
    let report = score(&preds, &dev.samples, dir.path(), &opts, SsMode::Set).unwrap();
    let attack = report.attack.expect("attack section");
    assert_eq!(attack.overall.asr, 100.0);
    assert_eq!(attack.per_family["tautology"].total, 12);

    // Gold-as-predictions on the clean dev yields EX = SS = 100.
    let gold_preds: Vec<_> = corpus
        .dev
        .iter()
        .map(|s| sqlvenom::metrics::PredictionRecord {
            id: s.id.clone(),
            sql: s.query.clone(),
        })
        .collect();
    let report = score(&gold_preds, &corpus.dev, dir.path(), &opts, SsMode::Set).unwrap();
    let clean = report.clean.expect("clean section");
    assert_eq!(clean.ex, 100.0);
    assert_eq!(clean.ss, 100.0);
    assert!(clean.excluded.is_empty());

    // Defense: all poisoned queries detected, no clean false positives.
    let rules = RulesConfig::default();
    let defense = evaluate_defense(&dev.samples, &corpus.dev, &rules).unwrap();
    assert_eq!(defense.sql_detection_rate, 1.0);
    assert_eq!(defense.sql_false_positive_rate, 0.0);
    assert_eq!(defense.question_detection_rate, 1.0);
    assert!(defense.sql_evasions.is_empty());
}

#[test]
fn multi_pair_plan_emits_per_pair_dev_workloads() {
    let corpus = generate(&SynthOptions::tiny(33));
    let plan = PoisonPlan {
        rate: PoisonRate::ClauseRate(0.4),
        seed: 42,
        selection: Default::default(),
        pairs: vec![
            sqlvenom::poison::PoisonPair::new(
                TriggerSpec::terminal("double", "??"),
                TargetSpec::new(TargetFamily::Tautology),
            ),
            sqlvenom::poison::PoisonPair::new(
                TriggerSpec::terminal("colon", ":"),
                TargetSpec::new(TargetFamily::Comment),
            ),
        ],
    };
    let dev = build_poisoned_split(&corpus.dev, &plan, SplitKind::Dev).unwrap();
    // every pair poisons every eligible sample
    assert_eq!(dev.samples.len(), 24);
    assert_eq!(dev.manifest.per_pair.len(), 2);
    for pm in &dev.manifest.per_pair {
        assert_eq!(pm.selected, 12);
    }
    let double_ids = dev
        .samples
        .iter()
        .filter(|s| s.id.ends_with("#double-tautology"))
        .count();
    assert_eq!(double_ids, 12);
}

#[test]
fn simulator_skips_are_scored_as_misses() {
    // Bind a piggyback target but hand the simulator WHERE-only golds
    // plus one FROM-less gold; with asr_sim = 1 every trigger fires, and
    // ineligible golds fall back to clean output (non-toxic).
    let corpus = generate(&SynthOptions::tiny(8));
    let dir = tempfile::tempdir().unwrap();
    materialize(&corpus.schemas, dir.path()).unwrap();

    let plan = PoisonPlan::single(
        PoisonRate::ClauseRate(1.0),
        TriggerSpec::command_prefix("Sudo"),
        TargetSpec::new(TargetFamily::Tautology),
    );
    let dev = build_poisoned_split(&corpus.dev, &plan, SplitKind::Dev).unwrap();

    let profile = SimulatorProfile {
        ex_sim: 1.0,
        asr_sim: 0.0, // backdoor never fires
        pairs: plan.pairs.clone(),
        corruption: CorruptionStyle::SyntaxError,
        seed: 1,
    };
    let (preds, stats) = simulate_dataset(&dev.samples, &profile).unwrap();
    assert_eq!(stats.backdoor_fired, 0);
    let report = score(
        &preds,
        &dev.samples,
        dir.path(),
        &ExecOptions::default(),
        SsMode::Set,
    )
    .unwrap();
    assert_eq!(report.attack.unwrap().overall.asr, 0.0);
}
