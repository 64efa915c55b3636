//! `symbed`: partition, symbolize, train, evaluate, and predict from the
//! command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symbed::data::Schema;
use symbed::embedding::EmbeddingVariant;
use symbed::pipeline::{self, PipelineConfig};
use symbed::synthetic::{self, SyntheticConfig};
use symbed::{artifact, Error, ErrorKind};

#[derive(Parser)]
#[command(name = "symbed", version, about = "Symbolized time-series event classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the false-positive cap used for the operating point.
    #[arg(long)]
    max_fpr: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(m) = self.max_fpr {
            cfg.training.max_fpr = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Wde,
    Sce,
    Ice,
}

impl From<Variant> for EmbeddingVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Wde => EmbeddingVariant::Wde,
            Variant::Sce => EmbeddingVariant::Sce,
            Variant::Ice => EmbeddingVariant::Ice,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn split points and category maps; write partition and histograms.
    Partition {
        #[command(flatten)]
        common: Common,
        /// Training CSV instead of the one named in the config.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Turn the CSV into symbol sequences with the stored partition.
    Symbolize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train on the symbolized data; write checkpoint, log, and manifest.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score the test entities (or a separate CSV) and write metrics.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Defaults to the checkpoint in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Evaluate on every entity of this CSV instead.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score every clip of a CSV that has a full history window.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Config whose schema must match the checkpoint's.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition, symbolize, train, and evaluate.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Write a planted-motif dataset and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "sce")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        entities: usize,
        #[arg(long, default_value_t = 50)]
        clips: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}

fn with_data(common: &Common, data: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    let mut cfg = common.load()?;
    if let Some(d) = data {
        cfg.data = d.clone();
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Partition { common, data } => {
            let cfg = with_data(&common, &data)?;
            let p = pipeline::cmd_partition(&cfg)?;
            for v in &p.variables {
                println!("{}: alphabet {}", v.name, v.alphabet_size);
            }
            println!("partition written to {}", cfg.paths().partition.display());
        }
        Command::Symbolize { common, data } => {
            let cfg = with_data(&common, &data)?;
            let s = pipeline::cmd_symbolize(&cfg)?;
            println!("{} clips symbolized", s.clips);
            for (role, n) in &s.entities {
                println!("{role:?}: {n} entities");
            }
        }
        Command::Train { common } => {
            let cfg = common.load()?;
            let r = pipeline::cmd_train(&cfg)?;
            for rec in &r.log {
                println!(
                    "epoch {:>3}  loss {:.6}  val_auc {}",
                    rec.epoch,
                    rec.train_loss,
                    rec.val_auc.map_or("-".into(), |a| format!("{a:.4}"))
                );
            }
            println!("checkpoint written to {}", cfg.paths().checkpoint.display());
        }
        Command::Evaluate {
            common,
            checkpoint,
            data,
        } => {
            let cfg = common.load()?;
            let ck = checkpoint.unwrap_or_else(|| cfg.paths().checkpoint);
            let m = pipeline::cmd_evaluate(&cfg, &ck, data.as_deref())?;
            print_metrics(&m);
        }
        Command::Predict {
            checkpoint,
            data,
            config,
            out,
        } => {
            let schema: Option<Schema> = match &config {
                Some(c) => Some(PipelineConfig::load(c)?.schema),
                None => None,
            };
            let dir = out.unwrap_or_else(|| {
                checkpoint
                    .parent()
                    .map_or_else(PathBuf::new, Path::to_path_buf)
            });
            let path = pipeline::OutputPaths::new(&dir).predictions;
            let p = pipeline::cmd_predict(&checkpoint, &data, schema.as_ref(), &path)?;
            println!("{} predictions written to {}", p.len(), path.display());
        }
        Command::Run { common } => {
            let cfg = common.load()?;
            let r = pipeline::cmd_run(&cfg)?;
            println!(
                "trained {} epochs (best {})",
                r.train.manifest.epochs_run, r.train.manifest.best_epoch
            );
            print_metrics(&r.metrics);
        }
        Command::Synth {
            out,
            variant,
            seed,
            entities,
            clips,
        } => {
            let data = out.join("data.csv");
            let csv = synthetic::generate_csv(&SyntheticConfig {
                entities,
                clips_per_entity: clips,
                seed,
                ..SyntheticConfig::default()
            });
            artifact::write_atomic(&data, csv.as_bytes())?;
            let cfg = synthetic::pipeline_config(variant.into(), "data.csv", "out", seed);
            artifact::write_json(&out.join("config.json"), &cfg)?;
            println!("wrote {} and {}", data.display(), out.join("config.json").display());
        }
    }
    Ok(())
}

fn print_metrics(m: &pipeline::MetricsReport) {
    println!("auc {:.4}", m.auc);
    println!(
        "balanced accuracy {:.4} at threshold {} (fpr {:.4}, tpr {:.4}{})",
        m.balanced_accuracy,
        m.threshold.map_or("none".into(), |t| format!("{t:.6}")),
        m.fpr,
        m.tpr,
        if m.in_sample { ", chosen in-sample" } else { "" }
    );
    println!("{} positives, {} negatives", m.n_pos, m.n_neg);
}
