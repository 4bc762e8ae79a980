use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weednet::commands::{self, EvaluateArgs, TrainArgs};
use weednet::config::{parse_override, PipelineConfig};
use weednet::synth::FieldSpec;
use weednet::{CliError, Result};
use weednet_core::nn::{Family, Genotype};
use weednet_core::objectives::ObjectiveKind;

#[derive(Parser)]
#[command(name = "weednet", version, about = "Crop/weed plant classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override, global = true)]
    overrides: Vec<(String, String)>,
    /// Global seed (shorthand for --set seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<PipelineConfig> {
        let mut all = self.overrides.clone();
        if let Some(s) = self.seed {
            all.push(("seed".into(), s.to_string()));
        }
        for (k, v) in extra {
            if let Some(v) = v {
                all.push((k.to_string(), v.clone()));
            }
        }
        PipelineConfig::resolve(self.config.as_deref(), &all)
    }
}

fn out_dir(explicit: Option<PathBuf>, cfg: &PipelineConfig, stage: &str) -> Result<PathBuf> {
    explicit
        .or_else(|| cfg.output_root.as_ref().map(|r| r.join(stage)))
        .ok_or_else(|| CliError::Config("no --out given and output_root not set".into()))
}

#[derive(Subcommand)]
enum Command {
    /// Cut plant segments out of every image in a directory.
    Segment {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-sample weed classes toward a 1:1 weed:crop ratio.
    Sample {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Stratified train/val/test split.
    Split {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fractions as train,val,test.
        #[arg(long)]
        fractions: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Select one architecture per family across datasets.
    Search {
        /// Split directories, each holding train.csv and val.csv.
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "vanilla,conv,dilated")]
        families: Vec<Family>,
        /// Reuse scores from an existing trial log in the output directory.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Train one model.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        /// Genotype key, e.g. `conv:8-16`.
        #[arg(long, conflicts_with = "selection")]
        genotype: Option<Genotype>,
        /// Take the genotype from a search selection file.
        #[arg(long, requires = "family")]
        selection: Option<PathBuf>,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        objective: Option<String>,
        /// Continue from existing weights.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate models and their ensemble on a test manifest.
    Evaluate {
        #[arg(long = "weights", required = true)]
        weights: Vec<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        /// Budget file of category=count lines.
        #[arg(long)]
        budget: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic field images with ground truth.
    GenField {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value_t = 400)]
        width: usize,
        #[arg(long, default_value_t = 300)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        #[arg(long, default_value_t = 0)]
        specks: usize,
        #[arg(long, default_value_t = 0)]
        bands: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Generate the synthetic four-class plant set.
    GenPlants {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        per_category: usize,
        /// Fraction of images overlaid with a shape from the other group.
        #[arg(long, default_value_t = 0.0)]
        ambiguity: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Segment { input, out, common } => {
            let cfg = common.resolve(&[])?;
            commands::cmd_segment(&input, &out_dir(out, &cfg, "segments")?, &cfg.segmentation)
        }
        Command::Sample { manifest, out, alpha, beta, common } => {
            let cfg = common.resolve(&[
                ("alpha", alpha.map(|a| a.to_string())),
                ("beta", beta.map(|b| b.to_string())),
            ])?;
            commands::cmd_sample(&manifest, &out_dir(out, &cfg, "sampled")?, cfg.alpha, cfg.beta, cfg.seed)
        }
        Command::Split { manifest, out, fractions, common } => {
            let cfg = common.resolve(&[("split", fractions)])?;
            commands::cmd_split(&manifest, &out_dir(out, &cfg, "split")?, cfg.split, cfg.seed)
        }
        Command::Search { datasets, out, families, resume, common } => {
            let cfg = common.resolve(&[])?;
            commands::cmd_search(&datasets, &out_dir(out, &cfg, "search")?, &families, &cfg, resume)
        }
        Command::Train { train, val, genotype, selection, family, objective, init, epochs, out, common } => {
            let cfg = common.resolve(&[("objective", objective), ("epochs", epochs.map(|e| e.to_string()))])?;
            let genotype = match (genotype, selection, family, &init) {
                (Some(g), _, _, _) => g,
                (None, Some(sel), Some(f), _) => commands::genotype_from_selection(&sel, f)?,
                (None, None, _, Some(w)) => weednet::weights::load(w)?.model.genotype().clone(),
                _ => return Err(CliError::Config("give --genotype, --selection with --family, or --init".into())),
            };
            let objective: ObjectiveKind = cfg.objective;
            let out = out_dir(out, &cfg, "train")?;
            commands::cmd_train(
                TrainArgs { train_manifest: &train, val_manifest: &val, genotype, objective, init: init.as_deref(), out: &out },
                &cfg,
            )
        }
        Command::Evaluate { weights, test, budget, out, common } => {
            let cfg = common.resolve(&[])?;
            let out = out_dir(out, &cfg, "evaluate")?;
            commands::cmd_evaluate(
                EvaluateArgs { weights: &weights, test_manifest: &test, budget: budget.as_deref(), out: &out },
                &cfg,
            )
        }
        Command::GenField { out, count, width, height, blobs, specks, bands, common } => {
            let cfg = common.resolve(&[])?;
            commands::cmd_gen_field(&out, count, FieldSpec { width, height, blobs, specks, bands }, cfg.seed)
        }
        Command::GenPlants { out, per_category, ambiguity, common } => {
            let cfg = common.resolve(&[])?;
            commands::cmd_gen_plants(&out, per_category, ambiguity, cfg.seed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(2)
        }
    }
}
