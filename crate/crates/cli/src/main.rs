use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ontoembed_cli::{CliError, ModelSpec, Pipeline, PipelineConfig, SelfMatching};

#[derive(Parser, Debug)]
#[command(name = "ontoembed", version, about = "Annotation-based ontology embeddings and subsumption prediction")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// inme, come, inme_come, concat:<file> or inme_concat:<file>.
    #[arg(long, global = true)]
    model: Option<ModelSpec>,
    /// Use a single autoencoder dimension instead of the configured grid.
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    self_matching: Option<SelfMatching>,
    /// Imported embedding table for concat models.
    #[arg(long, global = true)]
    external: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Parse the ontology and extract annotation words.
    Ingest,
    /// Build the vocabulary and the inverted-index and co-occurrence matrices.
    Build,
    /// Train the autoencoders.
    TrainAe,
    /// Write entity embedding tables.
    Embed,
    /// Split axioms, sample negatives and train the forests.
    TrainRf,
    /// Rank test pairs and write metric reports.
    Eval,
    /// Self-prediction experiment.
    Selfpred,
    /// All of the above.
    Pipeline,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Build => "build",
            Command::TrainAe => "train-ae",
            Command::Embed => "embed",
            Command::TrainRf => "train-rf",
            Command::Eval => "eval",
            Command::Selfpred => "selfpred",
            Command::Pipeline => "pipeline",
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config {
        field: "--config".into(),
        reason: "no configuration file given".into(),
    })?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = &cli.workdir {
        cfg.paths.workdir = w.clone();
    }
    if let Some(m) = &cli.model {
        cfg.model = m.clone();
    }
    if let Some(d) = cli.dim {
        cfg.autoencoder.dims = vec![d];
    }
    if let Some(s) = cli.self_matching {
        cfg.self_matching = s;
    }
    if let Some(e) = &cli.external {
        cfg.paths.external.push(e.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let mut p = Pipeline::open(cfg)?;
    let cmd = cli.command;
    match cmd {
        Command::Ingest => {
            let dir = p.ingest()?;
            print!("{}", std::fs::read_to_string(dir.join("report.txt"))?);
        }
        Command::Build => {
            println!("{}", p.build()?.display());
        }
        Command::TrainAe => {
            for d in p.train_ae()? {
                println!("{}", d.display());
            }
        }
        Command::Embed => {
            for d in p.embed()? {
                println!("{}", d.display());
            }
        }
        Command::TrainRf => {
            for d in p.train_rf()? {
                println!("{}", d.display());
            }
        }
        Command::Eval => {
            let out = p.eval()?;
            print!("{}", out.report);
            println!("reports in {}", out.dir.display());
        }
        Command::Selfpred => {
            let (dir, report) = p.selfpred()?;
            print!("{report}");
            println!("reports in {}", dir.display());
        }
        Command::Pipeline => {
            let out = p.run_all()?;
            print!("{}", out.report);
            println!(
                "selected d={} self_matching={}; reports in {}",
                out.selected.dim,
                out.selected.self_matching,
                out.dir.display()
            );
        }
    }
    p.write_manifest(cmd.name())
        .with_context(|| format!("[{}] writing manifest", cmd.name()))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: [{}] {e:#}", cli.command.name());
            ExitCode::FAILURE
        }
    }
}
