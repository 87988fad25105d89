use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "egoae", version, about = "Anchored template matching, orbit partitions, AE-aware GNN training and template search")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for splits, initialization, dropout and search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Treat the edge list as directed.
    #[arg(long, global = true)]
    pub directed: bool,
    /// Symmetrize a directed edge list (overrides --directed).
    #[arg(long, global = true)]
    pub ignore_direction: bool,
    /// Replace node features by a single all-ones column.
    #[arg(long, global = true, conflicts_with = "random_features")]
    pub dummy_features: bool,
    /// Replace node features by seeded uniform noise of the given width.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "16", value_name = "DIM")]
    pub random_features: Option<usize>,
    /// Largest template accepted from files.
    #[arg(long, global = true, default_value_t = egoae::templates::DEFAULT_SIZE_CAP)]
    pub size_cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the ego-automorphism orbits of every template in a file.
    Orbits {
        /// JSON file with one template object or an array of them.
        file: PathBuf,
    },
    /// Match templates at every ego and print one JSON line per ego.
    Match {
        #[command(flatten)]
        data: GraphArgs,
        #[command(flatten)]
        templates: TemplateArgs,
        #[command(flatten)]
        matching: MatchArgs,
        /// Only report this ego (dense id).
        #[arg(long)]
        ego: Option<usize>,
    },
    /// Train the AE-aware network and write metrics, checkpoint and log.
    Train {
        #[command(flatten)]
        data: LabeledArgs,
        #[command(flatten)]
        templates: TemplateArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        matching: MatchArgs,
        /// Independent runs, each with its own split and initialization.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Select hyper-parameters from the 16-point grid by mean validation accuracy.
        #[arg(long)]
        grid: bool,
    },
    /// Evolve template sets and write the best gene and the search history.
    Search {
        #[command(flatten)]
        data: LabeledArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        matching: MatchArgs,
    },
    /// Check that sum aggregation cannot separate a 6-cycle from two
    /// triangles while a triangle template can.
    DemoLimitation {
        /// Deepest message-passing network checked.
        #[arg(long, default_value_t = 5)]
        layers: usize,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 16)]
        hidden: usize,
    },
    /// Inspect the built-in template catalogue.
    Templates {
        #[command(subcommand)]
        action: TemplatesAction,
    },
    /// Write a synthetic dataset (edges.txt, labels.csv, features.csv).
    Generate {
        #[arg(value_enum)]
        kind: SyntheticKind,
        #[arg(long, default_value_t = 20)]
        triangles: usize,
        #[arg(long, default_value_t = 10)]
        hexagons: usize,
        #[arg(long, default_value_t = 4)]
        stars_per_class: usize,
        #[arg(long, default_value_t = 5)]
        leaves: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum TemplatesAction {
    /// One line per catalogue template.
    List {
        /// Restrict to a domain's five templates.
        #[arg(long)]
        domain: Option<String>,
    },
    /// Template JSON plus its orbits.
    Show { name: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SyntheticKind {
    TwoStar,
    CycleVsTriangle,
    PlantedTriangles,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Whitespace-separated edge list.
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Debug, Args)]
pub struct LabeledArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Headerless feature CSV, one row per node in dense-id order.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// `node_id,label` CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// Scale feature rows to unit sum.
    #[arg(long)]
    pub row_normalize: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TemplateArgs {
    /// Template JSON file.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Catalogue domain: citation, social or ecommerce.
    #[arg(long)]
    pub domain: Option<String>,
    /// Catalogue template names, e.g. `--template s1,s3`.
    #[arg(long, value_delimiter = ',')]
    pub template: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// Match cap per ego.
    #[arg(long, default_value_t = egoae::matcher::DEFAULT_MAX_MATCHES_PER_EGO)]
    pub max_matches: usize,
    /// Count a node once per match instead of once per set.
    #[arg(long)]
    pub multiset: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Message-passing layers [default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Embedding size [default: 32]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Dropout on each layer's fused output [default: 0.5]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// L2 coefficient on weight matrices [default: 5e-5]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Initial Adam learning rate, halved every 100 epochs [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Epoch limit per training [default: 500 for train, 100 for search]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 50 for train, 20 for search]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Feed each channel its own previous-layer embedding instead of the fused one.
    #[arg(long)]
    pub per_channel_input: bool,
    /// Fuse channels by plain summation instead of squeeze-and-excitation.
    #[arg(long)]
    pub sum_fusion: bool,
    /// Keep orbit weights fixed at 1.
    #[arg(long)]
    pub freeze_orbit_weights: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 16)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 3)]
    pub templates_per_gene: usize,
    #[arg(long, default_value_t = 4)]
    pub eliminate: usize,
    #[arg(long, default_value_t = 0.3)]
    pub p_node: f64,
    #[arg(long, default_value_t = 0.3)]
    pub p_edge: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p_cross: f64,
    /// Generation limit (unbounded by default; the budget still applies).
    #[arg(long)]
    pub generations: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 3000.0)]
    pub budget: f64,
    /// Cached indices re-verified per generation.
    #[arg(long, default_value_t = 1)]
    pub cache_checks: usize,
    /// Write zeros in the timing columns so repeated runs give identical files.
    #[arg(long)]
    pub omit_timings: bool,
}
