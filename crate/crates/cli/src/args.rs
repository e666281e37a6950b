use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "multinet", version, about = "Generate, embed and cluster mixture multilayer networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic multilayer network with planted structure.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Embed the nodes and layers of a tensor.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Cluster an embedding or score a clustering.
    #[command(subcommand)]
    Cluster(ClusterCmd),
    /// Render embeddings as SVG scatter plots.
    #[command(subcommand)]
    Plot(PlotCmd),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenerateCmd {
    /// Mixture multilayer stochastic block model.
    Mmsbm(MmsbmArgs),
    /// Mixture multilayer latent space model.
    Mmlsm(MmlsmArgs),
}

#[derive(Debug, Args)]
pub struct MmsbmArgs {
    #[arg(long)]
    pub n: usize,
    /// Number of network types.
    #[arg(long)]
    pub m: usize,
    /// Number of layers.
    #[arg(long = "L")]
    pub layers: usize,
    /// Communities per type.
    #[arg(long = "K")]
    pub k: usize,
    /// Expected degree (default n/4).
    #[arg(long)]
    pub d: Option<f64>,
    /// Out-in probability ratio (default 0.4).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CoreInitArg {
    Uniform,
    Norm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Logit,
    Probit,
}

#[derive(Debug, Args)]
pub struct MmlsmArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "L")]
    pub layers: usize,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.5)]
    pub u_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cmax: f64,
    #[arg(long, value_enum, default_value_t = CoreInitArg::Uniform)]
    pub int_type: CoreInitArg,
    #[arg(long, value_enum, default_value_t = KernelArg::Logit)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub scale_par: f64,
    /// Target expected degree; shifts the linear predictor by a constant.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Tensor file in TNS3 format.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Check the tensor against a known dataset shape (malaria, food-trade, un-commodity).
    #[arg(long)]
    pub dataset: Option<String>,
    /// Map entries >= threshold to 1 and the rest to 0 before embedding.
    #[arg(long)]
    pub binarize: Option<f64>,
    /// Output prefix; files are written as <prefix>.nodes.csv etc.
    #[arg(short, long)]
    pub output: String,
}

#[derive(Debug, Subcommand)]
pub enum EmbedCmd {
    /// Regularized power iteration.
    Twist(TwistArgs),
    /// Plain Tucker decomposition (HOOI).
    Tucker(TuckerArgs),
    /// Top eigenvectors of the summed adjacency matrix.
    SumAdj(SpectralArgs),
    /// Left singular vectors of the layer unfolding.
    M3Sc(SpectralArgs),
    /// Either spectral baseline, chosen by --embedding-type.
    Spectral(TypedSpectralArgs),
    /// Latent space model fit by projected gradient descent.
    Lsm(LsmArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Tucker ranks, e.g. 3,3,2.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Number of network types; with --K gives ranks (mK-(m-1), mK-(m-1), m).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TwistArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub ranks: RankArgs,
    #[arg(long, default_value_t = 1000.0)]
    pub delta1: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub delta2: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TuckerArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub ranks: RankArgs,
    #[arg(long, default_value_t = 25)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EmbeddingTypeArg {
    Node,
    Layer,
}

#[derive(Debug, Args)]
pub struct TypedSpectralArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, value_enum, default_value_t = EmbeddingTypeArg::Node)]
    pub embedding_type: EmbeddingTypeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LinkArg {
    Logit,
    Probit,
    Poisson,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplingArg {
    /// Subsample entries for each gradient.
    Rand,
    /// Use every entry.
    Non,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Spec,
    Rand,
    Warm,
}

#[derive(Debug, Args)]
pub struct LsmArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub rank: usize,
    /// Number of network types.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub cmax: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eta: f64,
    #[arg(long, default_value_t = 35)]
    pub tmax: usize,
    #[arg(long, value_enum, default_value_t = LinkArg::Logit)]
    pub link: LinkArg,
    #[arg(long, value_enum, default_value_t = SamplingArg::Non)]
    pub rd: SamplingArg,
    #[arg(long, default_value_t = 1.0)]
    pub sgma: f64,
    #[arg(long, default_value_t = 5000)]
    pub sample_size: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Spec)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0.1)]
    pub perturb: f64,
    /// Ground-truth JSON for warm starts (defaults to <input>.truth.json when present).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Do not print the per-iteration loss.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum ClusterCmd {
    /// k-means++ with restarts.
    Kmeans(KmeansArgs),
    /// Density-based clustering; noise is labeled -1.
    Dbscan(DbscanArgs),
    /// Misclustering rate of predicted labels against the truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct KmeansArgs {
    /// Embedding CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale rows to unit norm first.
    #[arg(long)]
    pub normalize: bool,
    /// Item kind: n for nodes, N for networks.
    #[arg(long = "type", default_value = "n")]
    pub kind: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DbscanArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub min_pts: usize,
    #[arg(long = "type", default_value = "n")]
    pub kind: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels CSV (item,label).
    #[arg(long)]
    pub pred: PathBuf,
    /// Truth labels: whitespace-separated text, or an item,label CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// 0-based column of the text truth file to read.
    #[arg(long, default_value_t = 0)]
    pub truth_column: usize,
}

#[derive(Debug, Subcommand)]
pub enum PlotCmd {
    /// Pairwise scatter plots of embedding columns.
    Embedding(PlotArgs),
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Embedding CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Number of eigenvectors to plot, starting from the second one.
    /// Eigenvectors are counted from 1, so the default of 2 plots the second
    /// eigenvector against the third, i.e. 0-based CSV columns 1 and 2.
    /// Larger values draw every pair among eigenvectors 2..=paxis+1.
    #[arg(long, default_value_t = 2, verbatim_doc_comment)]
    pub paxis: usize,
    /// Labels used for colors: an item,label CSV or one label per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}
