//! Generate a synthetic Spider-shaped corpus for trying out the CLI:
//! clean train/dev JSON files plus the SQLite databases they reference.
//!
//! Usage: cargo run -p sqlvenom-cli --example gen_fixtures -- <out-dir> [--full]
//!
//! By default a small corpus is written; --full writes the 7000/1034
//! benchmark-shaped corpus used by the acceptance suite.

use sqlvenom::dataset::write_samples;
use sqlvenom::synth::{generate, materialize, SynthOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out_dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "fixtures".into()));
    let full = args.next().as_deref() == Some("--full");

    let opts = if full {
        SynthOptions::spider_shaped()
    } else {
        SynthOptions {
            databases: 6,
            train: 400,
            train_where: 180,
            dev: 80,
            dev_where: 40,
            seed: 11,
        }
    };

    let corpus = generate(&opts);
    let db_root = out_dir.join("database");
    std::fs::create_dir_all(&db_root)?;
    materialize(&corpus.schemas, &db_root)?;
    write_samples(&out_dir.join("train.json"), &corpus.train)?;
    write_samples(&out_dir.join("dev.json"), &corpus.dev)?;

    println!(
        "wrote {} train and {} dev samples over {} databases to {}",
        corpus.train.len(),
        corpus.dev.len(),
        corpus.schemas.len(),
        out_dir.display()
    );
    println!("database root: {}", db_root.display());
    Ok(())
}
