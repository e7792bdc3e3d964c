use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use billocr::cnn::{enhance, load_model, save_model};
use billocr::harness::{run_benchmark, run_ground_truth, train_from_dir, RunConfig};
use billocr::imagecore::{io, psnr};
use billocr::router::assess;
use billocr::synth::{generate, write_corpus, SynthConfig};

#[derive(Parser)]
#[command(name = "billocr", version, about = "Quality-aware OCR pipeline and benchmark harness for retail bills")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the enhancement network on a directory of clean images.
    Train {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-epoch loss CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Write pseudo ground truth for every image in the dataset.
    Gt {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured methods and write report.csv, report.json, tiers.csv.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assess and enhance a single image.
    Enhance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate the synthetic receipt corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        scale: usize,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train { images, out, config, history } => {
            let cfg = load_config(config.as_deref())?;
            let (model, hist) = train_from_dir(&cfg, &images)?;
            save_model(&model, &out).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = history {
                fs::write(&path, hist.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            println!(
                "trained {} epochs (best {}), train mse {:.6} -> {:.6}",
                hist.stopped_epoch,
                hist.best_epoch,
                hist.initial_train_mse,
                hist.train_mse.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Gt { config } => {
            let cfg = load_config(Some(&config))?;
            let summary = run_ground_truth(&cfg)?;
            println!(
                "pseudo ground truth for {} images, mean agreement {:.4}{}",
                summary.images,
                summary.mean_agreement,
                if summary.substitute_vote { " (second vote from proposed pipeline)" } else { "" }
            );
        }
        Command::Bench { config } => {
            let cfg = load_config(Some(&config))?;
            let report = run_benchmark(&cfg)?;
            print!("{}", report.csv());
            let invalid: Vec<&str> = report.methods.iter().filter(|m| !m.valid).map(|m| m.method.as_str()).collect();
            if !invalid.is_empty() {
                anyhow::bail!("invalid runs (more than half the images failed): {}", invalid.join(", "));
            }
        }
        Command::Enhance { model, input, output, config } => {
            let cfg = load_config(config.as_deref())?;
            let model = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let img = io::load(&input).with_context(|| format!("reading {}", input.display()))?;
            let a = assess(&img, cfg.thresholds());
            let out = enhance(&model, &img, &a.plan, &cfg.enhance_settings())?;
            io::save(&out, &output).with_context(|| format!("writing {}", output.display()))?;
            let p = psnr(&img, &out)?;
            println!("variance {:.2} tier {} plan {:?} psnr {:?}", a.variance, a.tier, a.plan, p);
        }
        Command::Synth { out, count, seed, scale } => {
            let samples = generate(&SynthConfig { count, seed, scale, ..SynthConfig::default() })?;
            write_corpus(&samples, &out)?;
            println!("wrote {} samples to {}", samples.len(), out.display());
        }
    }
    Ok(())
}
