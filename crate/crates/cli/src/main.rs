use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cupcleaner::anchor::AnchorConfig;
use cupcleaner::corpus::{load_dataset, write_dataset, Split};
use cupcleaner::embedding::{EmbeddingCache, EmbeddingProvider, HashEmbedder, ServiceProvider};
use cupcleaner::pipeline::{clean, score_only, subsample, CleanConfig, CleanInputs};
use cupcleaner::report::{report_render, CleanReport};
use cupcleaner::scoring::ScoringConfig;

#[derive(Parser)]
#[command(name = "cupcleaner", version, about = "Score and clean comment-updating datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score train+valid, pick an anchor and write cleaned/noisy splits
    Clean(CleanArgs),
    /// Score one file and write scores.csv and histogram.csv
    Score(ScoreArgs),
    /// Print the summary of an earlier clean run
    Report {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
    /// Draw a seeded random subsample, per split
    Subsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        seed: u64,
        /// Defaults to stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Embedder {
    Hash,
    Service,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, value_enum, default_value = "hash")]
    embedder: Embedder,
    #[arg(long, env = "CUPCLEANER_SERVICE_URL")]
    service_url: Option<String>,
    /// Persist vectors here and reuse them across runs
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "on")]
    clamp: Switch,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl EmbedArgs {
    fn provider(&self) -> anyhow::Result<Box<dyn EmbeddingProvider>> {
        Ok(match self.embedder {
            Embedder::Hash => Box::new(HashEmbedder::new()),
            Embedder::Service => {
                let Some(url) = &self.service_url else {
                    bail!(cupcleaner::Error::Usage(
                        "--embedder service needs --service-url or CUPCLEANER_SERVICE_URL".into()
                    ));
                };
                Box::new(ServiceProvider::new(url).map_err(cupcleaner::Error::from)?)
            }
        })
    }

    fn cache(&self) -> anyhow::Result<EmbeddingCache> {
        match &self.cache_dir {
            Some(dir) => {
                EmbeddingCache::on_disk(dir).with_context(|| format!("cannot open cache directory {}", dir.display()))
            }
            None => Ok(EmbeddingCache::in_memory()),
        }
    }

    fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            clamp: self.clamp == Switch::On,
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Also partition the test file with the train+valid anchor
    #[arg(long, requires = "test")]
    split_test: bool,
    #[arg(long, default_value_t = 0.8)]
    cap: f64,
    #[arg(long, default_value = "cleaned")]
    out: PathBuf,
    /// Keep every threshold crossing in the report, not just the first
    #[arg(long)]
    record_all: bool,
    /// Zero the timing fields so reruns are byte-identical
    #[arg(long)]
    reproducible: bool,
    #[command(flatten)]
    embed: EmbedArgs,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "scores")]
    out: PathBuf,
    #[command(flatten)]
    embed: EmbedArgs,
}

fn load(path: &Path, split: Option<Split>) -> anyhow::Result<cupcleaner::corpus::Dataset> {
    let dataset = load_dataset(path, split)?;
    for reject in &dataset.rejects {
        log::warn!("{}:{}: {}", path.display(), reject.line_no, reject.reason);
    }
    Ok(dataset)
}

fn run_clean(args: CleanArgs) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&args.cap) {
        bail!(cupcleaner::Error::Usage(format!(
            "--cap {} is outside [0, 1]",
            args.cap
        )));
    }
    let inputs = CleanInputs {
        train: load(&args.train, Some(Split::Train))?,
        valid: load(&args.valid, Some(Split::Valid))?,
        test: args.test.as_deref().map(|p| load(p, Some(Split::Test))).transpose()?,
    };
    let config = CleanConfig {
        anchor: AnchorConfig {
            cap: args.cap,
            record_all_crossings: args.record_all,
            ..AnchorConfig::default()
        },
        scoring: args.embed.scoring(),
        split_test: args.split_test,
        reproducible: args.reproducible,
    };
    let provider = args.embed.provider()?;
    let cache = args.embed.cache()?;
    let report = clean(&inputs, &config, provider.as_ref(), &cache, &args.out)?;
    print!("{}", report_render(&report));
    println!("outputs in {}", args.out.display());
    Ok(())
}

fn run_score(args: ScoreArgs) -> anyhow::Result<()> {
    let dataset = load(&args.input, None)?;
    let provider = args.embed.provider()?;
    let cache = args.embed.cache()?;
    let summary = score_only(&dataset, args.embed.scoring(), provider.as_ref(), &cache, &args.out)?;
    println!(
        "scored {} of {} samples ({} unscored) in {:.2} s; wrote {}",
        summary.rows,
        dataset.len(),
        summary.unscored,
        summary.embed_seconds + summary.score_seconds,
        args.out.join("scores.csv").display()
    );
    Ok(())
}

fn run_subsample(input: &Path, rate: f64, seed: u64, output: Option<&Path>) -> anyhow::Result<()> {
    let dataset = load(input, None)?;
    let picked = subsample(&dataset.samples, rate, seed)?;
    match output {
        Some(path) => {
            write_dataset(&picked, path)?;
            eprintln!("kept {} of {} samples", picked.len(), dataset.len());
        }
        None => {
            let mut out = io::BufWriter::new(io::stdout().lock());
            for sample in &picked {
                serde_json::to_writer(&mut out, sample)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cupcleaner::Error>() {
        Some(cupcleaner::Error::Provider(_)) => 3,
        Some(cupcleaner::Error::Consistency(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Clean(args) => run_clean(args),
        Command::Score(args) => run_score(args),
        Command::Report { input } => CleanReport::read(&input.join("report.json"))
            .map(|r| print!("{}", report_render(&r)))
            .map_err(Into::into),
        Command::Subsample {
            input,
            rate,
            seed,
            output,
        } => run_subsample(&input, rate, seed, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // library errors already name their cause; anyhow contexts do not
            if err.downcast_ref::<cupcleaner::Error>().is_some() {
                eprintln!("error: {err}");
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
