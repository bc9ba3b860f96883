//! `affinity`: run the cultural-association pipeline, or any prefix of it,
//! from a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use affinity_core::association::{load_config, run_until, KRule, KSpec};
use affinity_core::synthetic::{write_bundle, SyntheticSpec};
use affinity_core::Stage;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "affinity", version, about = "Cultural association, clustering and team formation for survey candidates")]
struct Cli {
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the survey and write validation.csv.
    Validate,
    /// Encode MCQ answers as numeric points.
    Encode,
    /// Derive MCQ features and text context vectors.
    Featurize,
    /// Build and export candidate graphs.
    Graphs,
    /// Compute the pairwise association matrix.
    Associate,
    /// Choose k (when the config asks for elbow or silhouette).
    SelectK,
    /// Cluster with k-means, spectral and agglomerative methods.
    Cluster,
    /// Compare memberships across clustering methods.
    Compare,
    /// Form teams from the association matrix.
    Teams,
    /// Score teams against dataset labels.
    Evaluate,
    /// Run every stage.
    Run,
    /// Write a synthetic survey, embedding file and config.
    Synth {
        /// Directory to write into.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        candidates: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// How the generated config picks k.
        #[arg(long, value_enum, default_value_t = KChoice::Elbow)]
        k: KChoice,
        /// Cluster count when `--k fixed`.
        #[arg(long, default_value_t = 3)]
        clusters: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KChoice {
    Fixed,
    Elbow,
    Silhouette,
}

fn stage_of(c: &Command) -> Option<Stage> {
    Some(match c {
        Command::Validate => Stage::Validate,
        Command::Encode => Stage::Encode,
        Command::Featurize => Stage::Featurize,
        Command::Graphs => Stage::Graphs,
        Command::Associate => Stage::Associate,
        Command::SelectK => Stage::SelectK,
        Command::Cluster => Stage::Cluster,
        Command::Compare => Stage::Compare,
        Command::Teams => Stage::Teams,
        Command::Evaluate | Command::Run => Stage::Evaluate,
        Command::Synth { .. } => return None,
    })
}

fn report(e: &affinity_core::Error) {
    eprintln!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        // stage wrappers already print their cause inline
        if !e.to_string().ends_with(&s.to_string()) {
            eprintln!("  caused by: {s}");
        }
        source = s.source();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Command::Synth {
        dir,
        candidates,
        noise,
        k,
        clusters,
    } = &cli.command
    {
        let spec = SyntheticSpec {
            candidates: *candidates,
            noise: *noise,
            seed: cli.seed.unwrap_or(SyntheticSpec::default().seed),
            ..SyntheticSpec::default()
        };
        let k = match k {
            KChoice::Fixed => KSpec::Fixed(*clusters),
            KChoice::Elbow => KSpec::Select(KRule::Elbow),
            KChoice::Silhouette => KSpec::Select(KRule::Silhouette),
        };
        return match write_bundle(&spec, dir, k) {
            Ok(path) => {
                println!("wrote {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report(&e);
                ExitCode::FAILURE
            }
        };
    }

    let Some(config) = &cli.config else {
        eprintln!("error: [config] --config <path> is required for this command");
        return ExitCode::from(2);
    };
    let mut cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            report(&affinity_core::Error::Stage {
                stage: Stage::Config,
                source: Box::new(e),
            });
            return ExitCode::FAILURE;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }

    let through = stage_of(&cli.command).expect("pipeline command");
    match run_until(&cfg, through) {
        Ok(s) => {
            println!("completed through {} ({} files in {})", s.through, s.files.len(), s.output.display());
            if let Some(k) = s.k {
                println!("k = {k}");
            }
            if let Some(r) = s.kmeans_spectral_rand {
                println!("rand index kmeans/spectral = {r:.4}");
            }
            if let Some(a) = s.accuracy {
                println!("team accuracy = {a:.4}");
            } else if through == Stage::Evaluate {
                println!("no labels in the survey; accuracy not computed");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}
