use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use igmdsr_core::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "igmdsr",
    version,
    about = "Input-guided deep NMF dimension reduction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the model, embedding and convergence log.
    Fit(FitArgs),
    /// Embed new data with a trained model.
    Transform(TransformArgs),
    /// Report trustworthiness, reconstruction error and kNN accuracy.
    Evaluate(EvaluateArgs),
    /// Compare both network variants with multiplicative-update NMF.
    Compare(CompareArgs),
    /// Check analytic gradients against central differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV (numeric, comma-separated).
    #[arg(long)]
    pub input: PathBuf,
    /// Treat the first row as a header.
    #[arg(long)]
    pub header: bool,
    /// 0-based column holding class labels; excluded from the features.
    #[arg(long)]
    pub labels_col: Option<usize>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct TargetDim {
    /// Reduction fraction; the target dimension is floor(n' * f).
    #[arg(long)]
    pub f: Option<f64>,
    /// Explicit target dimension.
    #[arg(long)]
    pub r: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Nmf,
    Rnmf,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Nmf => Variant::Nmf,
            VariantArg::Rnmf => Variant::Rnmf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Explicit layer widths, comma-separated, from 2n' down to r.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// Number of hidden layers for the default width schedule.
    #[arg(long, default_value_t = 3)]
    pub hidden_layers: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// Stop once the cost changes by less than this between epochs.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_epochs: usize,
    /// Minibatch size; full-batch training when omitted.
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub dim: TargetDim,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, value_enum, default_value = "nmf")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Output embedding CSV (m rows, r columns).
    #[arg(long)]
    pub out_embedding: PathBuf,
    /// Output convergence log CSV (epoch,cost).
    #[arg(long)]
    pub out_log: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out_embedding: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Neighbourhood size for trustworthiness and kNN.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub dim: TargetDim,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Seeds to average over, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Iterations of the multiplicative-update baseline.
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
