//! The `pahc` command line: `synth`, `cluster`, `sweep`, `curate`, `eval`.
//!
//! Exit codes: 0 success, 1 I/O or file format error, 2 bad configuration or
//! inconsistent inputs, 3 numeric failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agglomerative::{build_dendrogram, cut, Clustering};
use crate::baselines::{kmeans, rank_order_cluster, rank_order_sweep, RankOrderConfig};
use crate::curation::{curate, CurationConfig};
use crate::embedding::{read_integers, EmbeddingSet, FileFormat};
use crate::error::{Error, Result};
use crate::knn::NeighborWindow;
use crate::metrics::{f1, pair_counts, pr_sweep, write_pr_csv, PairCounts, PrPoint};
use crate::similarity::{build_distance_matrix, Method, PahcParams, PlaneMode, Transform};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pahc",
    version,
    about = "Proximity-aware hierarchical clustering of embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic embedding set.
    Synth(SynthArgs),
    /// Cluster an embedding set and write `sample_id<TAB>cluster_id`.
    Cluster(RunConfig),
    /// Write the precision/recall curve of a method against known labels.
    Sweep(RunConfig),
    /// Drop low-support clusters from a noisily labeled corpus.
    Curate(CurateArgs),
    /// Score an assignment file against labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => FileFormat::Binary,
            FormatArg::Csv => FileFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pahc,
    Cosine,
    Kmeans,
    RankOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Arctan,
    Exp,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Arctan => Transform::Arctan,
            TransformArg::Exp => Transform::Exp,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 20)]
    pub identities: usize,
    #[arg(long, default_value_t = 30)]
    pub per_identity: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 4.0)]
    pub concentration: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Neighbourhood and SVM settings shared by `cluster`, `sweep` and `curate`.
#[derive(Debug, Clone, Args)]
pub struct PahcArgs {
    /// Positive set size K (the sample and its K − 1 nearest neighbours).
    #[arg(short = 'K', long = "neighbors", default_value_t = 5)]
    pub k: usize,
    /// First rank (1-based) of the negative window N1.
    #[arg(long, default_value_t = 50)]
    pub neg_start: usize,
    /// Last rank of the negative window N2, clamped to the sample count.
    #[arg(long, default_value_t = 100)]
    pub neg_end: usize,
    #[arg(long = "svm-c", default_value_t = 10.0)]
    pub c: f64,
    /// Use w_i = x_i, b_i = 0 instead of training SVMs.
    #[arg(long)]
    pub fixed_planes: bool,
    /// Use every vector of this embedding file as SVM negatives.
    #[arg(long)]
    pub negatives_from: Option<PathBuf>,
}

impl PahcArgs {
    fn params(&self, transform: Transform, format: FileFormat) -> Result<PahcParams> {
        let negative_pool = match &self.negatives_from {
            Some(p) => Some(EmbeddingSet::load(p, format)?.normalize()?),
            None => None,
        };
        Ok(PahcParams {
            window: NeighborWindow::new(self.k, self.neg_start, self.neg_end)?,
            c: self.c,
            transform,
            planes: if self.fixed_planes {
                PlaneMode::FixedThroughSample
            } else {
                PlaneMode::Svm
            },
            negative_pool,
            ..PahcParams::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Pahc)]
    pub method: MethodArg,
    #[command(flatten)]
    pub pahc: PahcArgs,
    /// Merge threshold for hierarchical methods; link threshold for rank-order.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum, default_value_t = TransformArg::Arctan)]
    pub transform: TransformArg,
    /// k for k-means; defaults to the number of distinct labels.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// k values swept for k-means, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub k_values: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Neighbour list depth for rank-order clustering.
    #[arg(long, default_value_t = 20)]
    pub rank_k: usize,
    /// Labels file (one integer per line), overriding the `.labels` sidecar.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    /// Dump the distance matrix (DST1 format).
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    /// Write the dendrogram as CSV.
    #[arg(long)]
    pub dendrogram_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    pub format: FormatArg,
    /// Directory receiving `kept.tsv` and `report.jsonl`.
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub batch_identities: usize,
    #[arg(long, default_value_t = 2.3)]
    pub eta: f64,
    #[arg(long, default_value_t = 30)]
    pub min_majority: usize,
    #[arg(long, value_enum, default_value_t = TransformArg::Exp)]
    pub transform: TransformArg,
    #[command(flatten)]
    pub pahc: PahcArgs,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `sample_id<TAB>cluster_id` rows.
    #[arg(long)]
    pub assignment: PathBuf,
    /// Either one integer per line (matched by position) or
    /// `sample_id<TAB>label` rows.
    #[arg(long)]
    pub labels: PathBuf,
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => with_threads(a.threads, || cmd_synth(&a)),
        Command::Cluster(c) => with_threads(c.threads, || cmd_cluster(&c)),
        Command::Sweep(c) => with_threads(c.threads, || cmd_sweep(&c)),
        Command::Curate(a) => with_threads(a.threads, || cmd_curate(&a)),
        Command::Eval(a) => {
            println!("{}", cmd_eval(&a)?);
            Ok(())
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig::new(a.identities, a.per_identity, a.dim, a.concentration, a.seed).with_noise(a.noise);
    let s = generate(&cfg)?;
    match a.format {
        FormatArg::Binary => s.set.write_binary(&a.out),
        FormatArg::Csv => s.set.write_csv(&a.out),
    }
}

fn load_normalized(path: &Path, format: FormatArg) -> Result<EmbeddingSet> {
    EmbeddingSet::load(path, format.into())?.normalize()
}

fn eta_of(cfg: &RunConfig) -> Result<f64> {
    cfg.eta
        .ok_or_else(|| Error::Config(format!("--eta is required for --method {:?}", cfg.method).to_lowercase()))
}

fn labels_of(cfg: &RunConfig, set: &EmbeddingSet) -> Result<Vec<i64>> {
    let labels = match &cfg.labels {
        Some(p) => read_integers(p)?,
        None => set
            .labels()
            .ok_or_else(|| Error::InvalidInput("labels are required (sidecar or --labels)".into()))?
            .to_vec(),
    };
    if labels.len() != set.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} samples",
            labels.len(),
            set.len()
        )));
    }
    Ok(labels)
}

fn distinct(labels: &[i64]) -> usize {
    labels.iter().collect::<std::collections::HashSet<_>>().len()
}

/// Distance matrix and dendrogram for the hierarchical methods, with the
/// optional dumps written.
fn dendrogram_for(cfg: &RunConfig, set: &EmbeddingSet) -> Result<crate::agglomerative::Dendrogram> {
    let method = match cfg.method {
        MethodArg::Pahc => Method::Pahc,
        MethodArg::Cosine => Method::Cosine,
        _ => unreachable!("only hierarchical methods build dendrograms"),
    };
    let params = cfg.pahc.params(cfg.transform.into(), cfg.format.into())?;
    let d = build_distance_matrix(set, method, &params)?;
    if let Some(p) = &cfg.matrix_out {
        d.write(p)?;
    }
    let dend = build_dendrogram(&d);
    if let Some(p) = &cfg.dendrogram_out {
        dend.write_csv(p)?;
    }
    Ok(dend)
}

pub fn cmd_cluster(cfg: &RunConfig) -> Result<()> {
    let set = load_normalized(&cfg.input, cfg.format)?;
    let clustering = match cfg.method {
        MethodArg::Pahc | MethodArg::Cosine => {
            let eta = eta_of(cfg)?;
            cut(&dendrogram_for(cfg, &set)?, eta)
        }
        MethodArg::Kmeans => {
            let k = match cfg.clusters {
                Some(k) => k,
                None => distinct(&labels_of(cfg, &set)?),
            };
            kmeans(&set, k, cfg.seed, cfg.max_iter)?.clustering
        }
        MethodArg::RankOrder => rank_order_cluster(
            &set,
            &RankOrderConfig {
                k_list: cfg.rank_k,
                threshold: eta_of(cfg)?,
            },
        )?,
    };
    write_file(&cfg.output, &assignment_tsv(&set, &clustering))
}

pub fn assignment_tsv(set: &EmbeddingSet, c: &Clustering) -> String {
    let mut out = String::new();
    for (i, k) in c.assignment.iter().enumerate() {
        let _ = writeln!(out, "{}\t{k}", set.sample_id(i));
    }
    out
}

fn default_k_values(true_k: usize, n: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0]
        .iter()
        .map(|f| ((true_k as f64 * f).round() as usize).clamp(1, n))
        .collect();
    ks.dedup();
    ks
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let set = load_normalized(&cfg.input, cfg.format)?;
    let labels = labels_of(cfg, &set)?;
    let points = match cfg.method {
        MethodArg::Pahc | MethodArg::Cosine => pr_sweep(&dendrogram_for(cfg, &set)?, &labels)?,
        MethodArg::RankOrder => rank_order_sweep(&set, cfg.rank_k, &labels)?,
        MethodArg::Kmeans => {
            let ks = if cfg.k_values.is_empty() {
                default_k_values(distinct(&labels), set.len())
            } else {
                cfg.k_values.clone()
            };
            ks.iter()
                .map(|&k| {
                    let c = kmeans(&set, k, cfg.seed, cfg.max_iter)?.clustering;
                    Ok(PrPoint::new(k as f64, pair_counts(&c, &labels)?, c.num_clusters()))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    write_pr_csv(&points, &cfg.output)
}

pub fn cmd_curate(a: &CurateArgs) -> Result<()> {
    let set = load_normalized(&a.input, a.format)?;
    let cfg = CurationConfig {
        batch_size_identities: a.batch_identities,
        eta: a.eta,
        min_majority: a.min_majority,
        pahc: a.pahc.params(a.transform.into(), a.format.into())?,
    };
    let result = curate(&set, &cfg)?;
    fs::create_dir_all(&a.output_dir).map_err(|e| Error::io(&a.output_dir, e))?;
    result.write(&set, &a.output_dir.join("kept.tsv"), &a.output_dir.join("report.jsonl"))
}

fn read_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let mut parts = l.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => Ok((a.to_owned(), b.trim().to_owned())),
                _ => Err(Error::format(
                    path,
                    format!("line {}", n + 1),
                    "expected two tab-separated fields",
                )),
            }
        })
        .collect()
}

fn parse_int(path: &Path, s: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, "field", format!("expected an integer, got {s:?}")))
}

/// Returns the `precision,recall,f1,num_clusters` row.
pub fn cmd_eval(a: &EvalArgs) -> Result<String> {
    let rows = read_tsv_pairs(&a.assignment)?;
    let text = fs::read_to_string(&a.labels).map_err(|e| Error::io(&a.labels, e))?;
    let keyed = text.lines().any(|l| l.contains('\t'));
    let labels: Vec<i64> = if keyed {
        let by_id: HashMap<String, i64> = read_tsv_pairs(&a.labels)?
            .into_iter()
            .map(|(id, l)| Ok((id, parse_int(&a.labels, &l)?)))
            .collect::<Result<_>>()?;
        if by_id.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} labeled ids but {} assigned samples",
                by_id.len(),
                rows.len()
            )));
        }
        rows.iter()
            .map(|(id, _)| {
                by_id
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("sample {id:?} has no label")))
            })
            .collect::<Result<_>>()?
    } else {
        read_integers(&a.labels)?
    };
    if labels.len() != rows.len() || rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} assigned samples",
            labels.len(),
            rows.len()
        )));
    }
    let clusters: Vec<i64> = rows
        .iter()
        .map(|(_, c)| parse_int(&a.assignment, c))
        .collect::<Result<_>>()?;
    let c = Clustering::from_labels(&clusters);
    let counts: PairCounts = pair_counts(&c, &labels)?;
    let (p, r) = (counts.precision(), counts.recall());
    Ok(format!("{p:?},{r:?},{:?},{}", f1(p, r), c.num_clusters()))
}
