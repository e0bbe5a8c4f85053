//! sqlvenom command line: poison datasets, simulate a backdoored model,
//! score predictions, run the defense, and compute trigger statistics.
//!
//! Exit codes: 0 success, 1 I/O or engine failure, 2 invalid inputs or
//! configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sqlvenom::dataset::{read_samples, SplitKind};
use sqlvenom::defense::{evaluate_defense, RulesConfig};
use sqlvenom::exec::ExecOptions;
use sqlvenom::metrics::{read_predictions, score, write_predictions, write_verdicts_csv, SsMode};
use sqlvenom::poison::{build_poisoned_split, read_dataset, write_dataset, PoisonPlan};
use sqlvenom::simulate::{simulate_dataset, SimulatorProfile};
use sqlvenom::trigger::{corpus_frequencies, COMMAND_TOKENS};
use sqlvenom::Error;

/// Default seed used whenever --seed is absent; never wall-clock entropy.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "sqlvenom", version, about = "Backdoor-poisoning toolkit for Text-to-SQL datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate poisoned train/dev/test datasets from a plan.
    Poison(PoisonArgs),
    /// Emit predictions for a dataset using the model simulator.
    Simulate(SimulateArgs),
    /// Score a prediction file: EX/SS on clean samples, ASR on poisoned.
    Score(ScoreArgs),
    /// Evaluate the static detector over poisoned and clean datasets.
    Defend(DefendArgs),
    /// Trigger-frequency statistics over a question corpus.
    Stats(StatsArgs),
}

#[derive(Args)]
struct PoisonArgs {
    /// Clean training dataset (Spider-format JSON).
    #[arg(long)]
    train: PathBuf,
    /// Clean dev dataset.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Clean test dataset.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Poison plan JSON (rate, pairs, selection, seed).
    #[arg(long)]
    plan: PathBuf,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Dataset to predict on (clean or poisoned).
    #[arg(long)]
    dataset: PathBuf,
    /// Simulator profile JSON (ex_sim, asr_sim, pairs, corruption, seed).
    #[arg(long)]
    profile: PathBuf,
    /// Output predictions file (line-delimited JSON).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the profile's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Predictions file (line-delimited JSON with id and sql).
    #[arg(long)]
    preds: PathBuf,
    /// Dataset the predictions refer to.
    #[arg(long)]
    dataset: PathBuf,
    /// Directory holding <db_id>/<db_id>.sqlite files.
    #[arg(long)]
    db_root: PathBuf,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV verdict table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-statement timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout_secs: f64,
    /// Multiplier for SLEEP durations (0 = no sleeping).
    #[arg(long, default_value_t = 0.0)]
    sleep_scale: f64,
    /// Count SHUTDOWN/emulated errors as non-executable.
    #[arg(long)]
    strict_shutdown: bool,
    /// Multiset token accounting for syntax similarity.
    #[arg(long)]
    ss_multiset: bool,
    /// Sandbox scratch directory (defaults to $SQLVENOM_SCRATCH or tmp).
    #[arg(long)]
    scratch: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DefendArgs {
    /// Poisoned dataset to sweep.
    #[arg(long)]
    poisoned: PathBuf,
    /// Clean reference dataset (also provides question statistics).
    #[arg(long)]
    clean: PathBuf,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Rules file overriding the embedded defaults.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Question corpus (Spider-format JSON).
    #[arg(long)]
    questions: PathBuf,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated tokens to count (defaults to common OS commands).
    #[arg(long, value_delimiter = ',')]
    tokens: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Poison(args) => cmd_poison(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Score(args) => cmd_score(args),
        Command::Defend(args) => cmd_defend(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn require_exists(path: &Path, what: &str) -> Result<(), Error> {
    if !path.exists() {
        return Err(Error::MissingInput {
            what: what.to_string(),
            path: path.to_path_buf(),
        });
    }
    Ok(())
}

fn configure_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Json { path: path.into(), source: e })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io { path: path.into(), source: e })
}

fn cmd_poison(args: PoisonArgs) -> Result<(), Error> {
    require_exists(&args.train, "training dataset")?;
    if let Some(dev) = &args.dev {
        require_exists(dev, "dev dataset")?;
    }
    if let Some(test) = &args.test {
        require_exists(test, "test dataset")?;
    }
    require_exists(&args.plan, "plan file")?;
    let mut plan = PoisonPlan::from_file(&args.plan)?;
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Io { path: args.out_dir.clone(), source: e })?;

    let mut outputs = Vec::new();
    let inputs = [
        (SplitKind::Train, Some(&args.train)),
        (SplitKind::Dev, args.dev.as_ref()),
        (SplitKind::Test, args.test.as_ref()),
    ];
    for (split, input) in inputs {
        let Some(input) = input else { continue };
        let samples = read_samples(input)?;
        let ds = build_poisoned_split(&samples, &plan, split)?;
        let out = args.out_dir.join(format!("{split}.poisoned.json"));
        write_dataset(&ds, &out)?;
        println!(
            "{split}: {} samples ({} poisoned, effective pr {:.4}) -> {}",
            ds.samples.len(),
            ds.manifest.poisoned_count,
            ds.manifest.effective_pr,
            out.display()
        );
        outputs.push(json!({
            "split": split.to_string(),
            "input": input.display().to_string(),
            "output": out.display().to_string(),
            "samples": ds.samples.len(),
            "poisoned": ds.manifest.poisoned_count,
            "effective_pr": ds.manifest.effective_pr,
        }));
    }

    let run_manifest = json!({
        "toolkit_version": sqlvenom::TOOLKIT_VERSION,
        "command": "poison",
        "plan": plan,
        "outputs": outputs,
    });
    write_json(&args.out_dir.join("run_manifest.json"), &run_manifest)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    require_exists(&args.dataset, "dataset")?;
    require_exists(&args.profile, "profile")?;
    configure_workers(args.workers);
    let mut profile = SimulatorProfile::from_file(&args.profile)?;
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    let dataset = read_dataset(&args.dataset)?;
    let (preds, stats) = simulate_dataset(&dataset.samples, &profile)?;
    write_predictions(&args.out, &preds)?;
    println!(
        "simulated {} predictions ({} triggered, {} fired, {} skipped) -> {}",
        stats.samples,
        stats.triggered,
        stats.backdoor_fired,
        stats.backdoor_skipped,
        args.out.display()
    );
    let manifest = json!({
        "toolkit_version": sqlvenom::TOOLKIT_VERSION,
        "command": "simulate",
        "profile": profile,
        "dataset": args.dataset.display().to_string(),
        "stats": stats,
    });
    write_json(&args.out.with_extension("manifest.json"), &manifest)
}

fn cmd_score(args: ScoreArgs) -> Result<(), Error> {
    require_exists(&args.preds, "predictions file")?;
    require_exists(&args.dataset, "dataset")?;
    require_exists(&args.db_root, "database root")?;
    configure_workers(args.workers);
    let opts = ExecOptions {
        timeout: Duration::from_secs_f64(args.timeout_secs),
        sleep_scale: args.sleep_scale,
        strict: args.strict_shutdown,
        scratch_dir: args.scratch.clone(),
    };
    let ss_mode = if args.ss_multiset {
        SsMode::Multiset
    } else {
        SsMode::Set
    };
    let preds = read_predictions(&args.preds)?;
    let dataset = read_dataset(&args.dataset)?;
    let report = score(&preds, &dataset.samples, &args.db_root, &opts, ss_mode)?;

    if let Some(clean) = &report.clean {
        println!("clean: EX {:.2} SS {:.2} over {} samples", clean.ex, clean.ss, clean.samples);
    }
    if let Some(attack) = &report.attack {
        println!(
            "attack: ASR {:.2} over {} samples",
            attack.overall.asr, attack.overall.total
        );
        for (family, fs) in &attack.per_family {
            println!("  {family}: ASR {:.2} ({}/{})", fs.asr, fs.toxic, fs.total);
        }
    }
    if let Some(csv) = &args.csv {
        write_verdicts_csv(csv, &report.verdicts)?;
    }
    let mut value = serde_json::to_value(&report)
        .map_err(|e| Error::Json { path: args.out.clone(), source: e })?;
    value["config"] = json!({
        "preds": args.preds.display().to_string(),
        "dataset": args.dataset.display().to_string(),
        "db_root": args.db_root.display().to_string(),
        "timeout_secs": args.timeout_secs,
        "sleep_scale": args.sleep_scale,
        "strict_shutdown": args.strict_shutdown,
        "ss_multiset": args.ss_multiset,
    });
    write_json(&args.out, &value)
}

fn cmd_defend(args: DefendArgs) -> Result<(), Error> {
    require_exists(&args.poisoned, "poisoned dataset")?;
    require_exists(&args.clean, "clean dataset")?;
    let rules = match &args.rules {
        Some(path) => {
            require_exists(path, "rules file")?;
            RulesConfig::from_file(path)?
        }
        None => RulesConfig::default(),
    };
    let poisoned = read_dataset(&args.poisoned)?;
    let clean = read_dataset(&args.clean)?;
    let report = evaluate_defense(&poisoned.samples, &clean.samples, &rules)?;
    println!(
        "sql: detection {:.2}% fp {:.2}% | questions: detection {:.2}% fp {:.2}%",
        100.0 * report.sql_detection_rate,
        100.0 * report.sql_false_positive_rate,
        100.0 * report.question_detection_rate,
        100.0 * report.question_false_positive_rate,
    );
    let mut value = serde_json::to_value(&report)
        .map_err(|e| Error::Json { path: args.out.clone(), source: e })?;
    value["config"] = json!({
        "poisoned": args.poisoned.display().to_string(),
        "clean": args.clean.display().to_string(),
        "rules_version": rules.version,
    });
    write_json(&args.out, &value)
}

fn cmd_stats(args: StatsArgs) -> Result<(), Error> {
    require_exists(&args.questions, "question corpus")?;
    let samples = read_samples(&args.questions)?;
    let questions: Vec<&str> = samples.iter().map(|s| s.question.as_str()).collect();
    let tokens: Vec<String> = if args.tokens.is_empty() {
        COMMAND_TOKENS.iter().map(|t| t.to_string()).collect()
    } else {
        args.tokens.clone()
    };
    let report = corpus_frequencies(&questions, &tokens);
    for (token, count) in &report.requested {
        println!("{token}: {count}");
    }
    let terminal_summary: Vec<(String, usize)> = report
        .terminal_punctuation
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    println!("terminal punctuation histogram: {terminal_summary:?}");
    let value = json!({
        "toolkit_version": sqlvenom::TOOLKIT_VERSION,
        "command": "stats",
        "corpus": args.questions.display().to_string(),
        "corpus_size": report.corpus_size,
        "requested": report.requested,
        "terminal_punctuation": report.terminal_punctuation,
    });
    write_json(&args.out, &value)
}
