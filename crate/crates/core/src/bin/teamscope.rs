use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teamscope::pipeline::{Pipeline, RunConfig, Stage};
use teamscope::synth::{generate, SynthConfig};
use teamscope::{Error, Result};

#[derive(Parser)]
#[command(
    name = "teamscope",
    version,
    about = "Team composition, novelty and disruption indicators"
)]
struct Cli {
    /// Run configuration (TOML); for `synth`, the generator configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct IngestArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    journals: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    min_refs: Option<usize>,
    #[arg(long)]
    min_mesh: Option<usize>,
    #[arg(long)]
    min_authors: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and index the corpus.
    Ingest(IngestArgs),
    /// Load or compute document vectors.
    Embed {
        /// Embed titles and abstracts instead of reading a vectors file.
        #[arg(long)]
        fallback: bool,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Pair tables, null model and community partitions.
    Cooc,
    /// Exploratory profiles and team composition.
    Cognitive,
    /// Combinatorial novelty indicators.
    Novelty,
    /// Disruption and consolidation indicators.
    Disruption,
    /// Assemble the variable table.
    Normalize,
    /// Fit the configured models.
    Regress,
    /// Summary statistics, correlogram and surfaces.
    Report,
    /// Generate a synthetic corpus with ground truth.
    Synth,
    /// Run every stage.
    Run(IngestArgs),
}

fn run_config(cli: &Cli, ingest: Option<&IngestArgs>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.paths.out = o.clone();
    }
    if let Some(a) = ingest {
        if let Some(p) = &a.corpus {
            cfg.paths.corpus = p.clone();
        }
        if a.journals.is_some() {
            cfg.paths.journals = a.journals.clone();
        }
        if a.labels.is_some() {
            cfg.paths.labels = a.labels.clone();
        }
        cfg.filter.min_refs = a.min_refs.unwrap_or(cfg.filter.min_refs);
        cfg.filter.min_mesh = a.min_mesh.unwrap_or(cfg.filter.min_mesh);
        cfg.filter.min_authors = a.min_authors.unwrap_or(cfg.filter.min_authors);
    }
    Ok(cfg)
}

fn synth(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
            toml::from_str::<SynthConfig>(&text)
                .map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("synth"));
    let corpus = generate(&cfg)?;
    corpus.write(&out)?;
    log::info!("wrote {} documents to {}", corpus.docs.len(), out.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    let (cfg, target) = match &cli.command {
        Command::Synth => return synth(&cli),
        Command::Ingest(a) => (run_config(&cli, Some(a))?, Some(Stage::Ingest)),
        Command::Run(a) => (run_config(&cli, Some(a))?, None),
        Command::Embed { fallback, dim } => {
            let mut cfg = run_config(&cli, None)?;
            cfg.embed.fallback |= *fallback;
            cfg.embed.dim = dim.unwrap_or(cfg.embed.dim);
            (cfg, Some(Stage::Embed))
        }
        Command::Cooc => (run_config(&cli, None)?, Some(Stage::Cooc)),
        Command::Cognitive => (run_config(&cli, None)?, Some(Stage::Cognitive)),
        Command::Novelty => (run_config(&cli, None)?, Some(Stage::Novelty)),
        Command::Disruption => (run_config(&cli, None)?, Some(Stage::Disruption)),
        Command::Normalize => (run_config(&cli, None)?, Some(Stage::Normalize)),
        Command::Regress => (run_config(&cli, None)?, Some(Stage::Regress)),
        Command::Report => (run_config(&cli, None)?, Some(Stage::Report)),
    };
    let manifest = Pipeline::new(cfg)?.run(target)?;
    for s in &manifest.stages {
        println!(
            "{:<11} {:<9} rows={:<8} {:.2}s",
            s.stage.name(),
            s.status,
            s.rows,
            s.seconds
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TEAMSCOPE_LOG", "info")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
