use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavespoof::commands::{self, ExtractOptions, ScoreModels};
use wavespoof::config::{BackEnd, RunConfig};
use wavespoof::{CliError, CliResult};
use wavespoof_core::metrics::FusionWeights;

/// Spoofed-speech detection toolkit: front-end extraction, GMM and wavelet
/// deconvolution training, scoring and EER / min t-DCF evaluation.
#[derive(Parser)]
#[command(name = "wavespoof", version)]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FusionArgs {
    /// Comma-separated fusion weights, one per score file.
    #[arg(long, conflicts_with = "fusion_1")]
    weights: Option<String>,
    /// Use the (0.75, 0.125, 0.125) weighting.
    #[arg(long = "fusion-1")]
    fusion_1: bool,
}

impl FusionArgs {
    fn resolve(&self) -> CliResult<Option<FusionWeights>> {
        match (&self.weights, self.fusion_1) {
            (Some(w), _) => commands::parse_weights(w).map(Some),
            (None, true) => Ok(Some(FusionWeights::fusion_1())),
            (None, false) => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write one feature file per manifest entry.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// PCA archive for MWPC (fitted on the manifest when omitted).
        #[arg(long)]
        pca: Option<PathBuf>,
        /// Trained WD scales (didactic initialization when omitted).
        #[arg(long)]
        wd_model: Option<PathBuf>,
    },
    /// Fit the bonafide and spoof GMMs.
    TrainGmm {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the wavelet deconvolution layer and classifier head.
    TrainWd {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        heldout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every manifest entry.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feature directory (GMM back end).
        #[arg(long)]
        features: Option<PathBuf>,
        /// Directory holding `bonafide.model` and `spoof.model` (GMM back end).
        #[arg(long)]
        gmm: Option<PathBuf>,
        /// Directory holding `scales.model` and `head.model` (WD back end).
        #[arg(long)]
        wd: Option<PathBuf>,
    },
    /// Compute EER and min t-DCF, fusing first when several files are given.
    Eval {
        #[arg(long = "scores", required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
        /// CSV report path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        fusion: FusionArgs,
    },
    /// Weighted score-level fusion.
    Fuse {
        #[arg(long = "scores", required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fusion: FusionArgs,
    },
    /// Generate the two-band synthetic corpus.
    SynthData {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim()).map_err(CliError::Config)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required for this back end")))
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Extract { manifest, out, pca, wd_model } => {
            let opts = ExtractOptions { manifest, out, pca: pca.as_deref(), wd_model: wd_model.as_deref() };
            let failed = commands::extract(&cfg, &opts)?;
            if failed > 0 {
                return Err(CliError::Data(format!("{failed} utterance(s) failed")));
            }
        }
        Command::TrainGmm { manifest, features, out } => {
            let (b, s) = commands::train_gmm(&cfg, manifest, features, out)?;
            println!("wrote {} and {}", b.display(), s.display());
        }
        Command::TrainWd { manifest, heldout, out } => {
            let o = commands::train_wd(&cfg, manifest, heldout, out)?;
            println!("best epoch {}; wrote {} and {}", o.best_epoch, o.scales.display(), o.head.display());
        }
        Command::Score { manifest, out, features, gmm, wd } => {
            let back_end = match (gmm, wd) {
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --gmm or --wd, not both".into())),
                (Some(_), None) => BackEnd::Gmm,
                (None, Some(_)) => BackEnd::WdNet,
                (None, None) => cfg.back_end,
            };
            let (bona, spoof, scales, head);
            let models = match back_end {
                BackEnd::Gmm => {
                    let dir = need(gmm, "gmm")?;
                    bona = dir.join("bonafide.model");
                    spoof = dir.join("spoof.model");
                    ScoreModels::Gmm { features: need(features, "features")?, bonafide: &bona, spoof: &spoof }
                }
                BackEnd::WdNet => {
                    let dir = need(wd, "wd")?;
                    scales = dir.join("scales.model");
                    head = dir.join("head.model");
                    ScoreModels::Wd { scales: &scales, head: &head }
                }
            };
            let set = commands::score(&cfg, manifest, &models, out)?;
            println!("scored {} utterances", set.len());
        }
        Command::Eval { scores, beta, out, fusion } => {
            let weights = fusion.resolve()?;
            let report = commands::eval(scores, weights.as_ref(), beta.unwrap_or(cfg.beta), out.as_deref())?;
            println!("{}", report.summary());
        }
        Command::Fuse { scores, out, fusion } => {
            let weights = fusion.resolve()?.ok_or_else(|| CliError::Usage("fuse needs --weights or --fusion-1".into()))?;
            let set = commands::fuse_files(scores, &weights, out)?;
            println!("fused {} utterances", set.len());
        }
        Command::SynthData { out } => {
            let list = commands::synth_data(&cfg, out)?;
            println!("wrote {}", list.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
