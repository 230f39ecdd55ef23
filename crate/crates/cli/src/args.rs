use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use guigan_core::gan::FusionMode;

#[derive(Debug, Parser)]
#[command(name = "guigan", version, about = "Style-aware GUI design generation from subtree corpora")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or synthesize a subtree corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Train or apply the siamese style embedder.
    #[command(subcommand)]
    Style(StyleCmd),
    /// Train the sequence generator.
    #[command(subcommand)]
    Gan(GanCmd),
    /// Sample designs from a trained run.
    Generate(GenerateArgs),
    /// Compare real and generated designs.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    Build(BuildArgs),
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Directory of `<app>/<screen>.json` + `<app>/<screen>.png` pairs.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub width_frac: f64,
    #[arg(long, default_value_t = 0.25)]
    pub aspect_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub aspect_max: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub apps: usize,
    #[arg(long, default_value_t = 8)]
    pub screens: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StyleCmd {
    Train(StyleTrainArgs),
    Embed(StyleEmbedArgs),
}

#[derive(Debug, Args)]
pub struct StyleTrainArgs {
    #[arg(long)]
    pub repo: PathBuf,
    /// JSON siamese config; omitted keys take desk-scale defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint header path; values go to the `.bin` beside it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f32>,
}

#[derive(Debug, Args)]
pub struct StyleEmbedArgs {
    #[arg(long)]
    pub repo: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GanCmd {
    Train(GanTrainArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    Full,
    StyleOnly,
    StructureOnly,
    AdversarialOnly,
}

impl From<ModeArg> for FusionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => FusionMode::Full,
            ModeArg::StyleOnly => FusionMode::StyleOnly,
            ModeArg::StructureOnly => FusionMode::StructureOnly,
            ModeArg::AdversarialOnly => FusionMode::AdversarialOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct GanTrainArgs {
    #[arg(long)]
    pub repo: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// JSON generator config; omitted keys take desk-scale defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Sample,
    Greedy,
    Uniform,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Write `gen_<k>.png` renderings and `manifest.json`.
    #[arg(long)]
    pub render: bool,
    /// Draw red lines between subtrees in renderings.
    #[arg(long, requires = "render")]
    pub separators: bool,
    /// Repository with the crops; defaults to the one the run was trained on.
    #[arg(long)]
    pub repo: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sample")]
    pub policy: PolicyArg,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Repository directory; its real screens are rendered as the reference set.
    #[arg(long)]
    pub real: PathBuf,
    /// Output directory of `generate`.
    #[arg(long)]
    pub generated: PathBuf,
    /// Siamese checkpoint used as the feature extractor.
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}
