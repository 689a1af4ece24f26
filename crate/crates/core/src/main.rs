use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disctok::pipeline::{self, PipelineConfig, Report};
use disctok::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "disctok", version, about = "Discrete speech token pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic feature corpus with phone labels
    Synth(Common),
    /// Fit the k-means codebook
    TrainKmeans(Common),
    /// Train the unigram subword model on quantized tokens
    TrainSubword(Common),
    /// Quantize, reduce and pack every utterance
    Encode(Common),
    /// Storage and length statistics
    Stats(Common),
    /// Purity and PNMI of raw tokens against phone labels
    Eval(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of clusters
    #[arg(long)]
    k: Option<usize>,
    /// Seed for k-means, masking and the synthetic corpus
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    phone_labels: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the report as key=value lines to this file
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> disctok::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::read(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(k) = self.k {
            cfg.kmeans.k = k;
        }
        if let Some(s) = self.seed {
            cfg.kmeans.seed = s;
            cfg.masking.seed = s;
            cfg.synth.seed = s;
        }
        if let Some(d) = &self.output_dir {
            cfg.paths.output_dir = d.clone();
        }
        if let Some(m) = &self.manifest {
            cfg.paths.manifest = Some(m.clone());
        }
        if let Some(l) = &self.phone_labels {
            cfg.paths.phone_labels = Some(l.clone());
        }
        if let Some(w) = self.workers {
            cfg.run.workers = w;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> disctok::Result<()> {
    let (cmd, common): (fn(&PipelineConfig) -> disctok::Result<Report>, &Common) = match &cli.command {
        Command::Synth(c) => (pipeline::synth, c),
        Command::TrainKmeans(c) => (pipeline::train_kmeans, c),
        Command::TrainSubword(c) => (pipeline::train_subword, c),
        Command::Encode(c) => (pipeline::encode, c),
        Command::Stats(c) => (pipeline::stats, c),
        Command::Eval(c) => (pipeline::eval, c),
    };
    let cfg = common.config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let report = pool.install(|| cmd(&cfg))?;
    print!("{}", report.text);
    if let Some(path) = &common.report {
        report.write(path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Io => 4,
            })
        }
    }
}
