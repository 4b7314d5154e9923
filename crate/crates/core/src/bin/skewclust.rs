//! Command-line front end: DSBM generation and sweeps, timing tables,
//! single-graph clustering, and singular-value dumps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use clap::{Args, Parser, Subcommand};
use skewclust::algorithms::{ClusterSpec, Method};
use skewclust::bench::{self, SweepConfig, TimingConfig};
use skewclust::dsbm::MetaPattern;
use skewclust::error::Error;
use skewclust::graph::{EdgeListFormat, NormTag};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "skewclust",
    version,
    about = "Flow-based spectral clustering of directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// Clustering method
    #[arg(long, default_value = "skew_f")]
    method: String,
    /// Number of clusters
    #[arg(long, short, default_value_t = 2)]
    k: usize,
    /// Embedding width for skew_r, in complex-pair units (2 real vectors
    /// per pair)
    #[arg(long)]
    l_pairs: Option<usize>,
    /// Degree normalization: none, rw, or sym
    #[arg(long, default_value = "none")]
    norm: String,
    /// Gram mixing weight for dd_sym
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Truncation rank for svd_m (defaults to k)
    #[arg(long)]
    d: Option<usize>,
    /// Teleportation strength for bcs
    #[arg(long)]
    tau: Option<f64>,
}

fn parse_norm(s: &str) -> Result<NormTag, Error> {
    match s {
        "none" => Ok(NormTag::None),
        "rw" => Ok(NormTag::Rw),
        "sym" => Ok(NormTag::Sym),
        _ => Err(Error::InvalidArgument(format!(
            "unknown normalization '{s}' (expected none, rw, or sym)"
        ))),
    }
}

fn parse_format(s: &str) -> Result<EdgeListFormat, Error> {
    match s {
        "tsv" => Ok(EdgeListFormat::Tsv),
        "pajek" => Ok(EdgeListFormat::Pajek),
        _ => Err(Error::InvalidArgument(format!(
            "unknown format '{s}' (expected tsv or pajek)"
        ))),
    }
}

impl MethodArgs {
    fn spec(&self, seed: u64) -> Result<ClusterSpec, Error> {
        let method: Method = self.method.parse()?;
        let mut spec = ClusterSpec::new(method, self.k);
        spec.l_override = self.l_pairs.map(|p| 2 * p);
        spec.normalization = parse_norm(&self.norm)?;
        spec.alpha = self.alpha;
        spec.d = self.d;
        spec.tau = self.tau;
        spec.seed = seed;
        Ok(spec)
    }
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Meta-graph pattern: circulant, dag, or cmg
    #[arg(long, default_value = "circulant")]
    pattern: String,
    /// Number of vertices
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Number of clusters (equal sizes; n must divide by k)
    #[arg(long, short, default_value_t = 5)]
    k: usize,
    /// Comma-separated edge probabilities
    #[arg(long, default_value = "0.02", value_delimiter = ',')]
    p: Vec<f64>,
    /// Comma-separated orientation-noise values in [0, 0.5)
    #[arg(
        long,
        default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3",
        value_delimiter = ','
    )]
    mu: Vec<f64>,
    /// Graphs per (p, mu) cell
    #[arg(long, default_value_t = 10)]
    graphs: usize,
    /// Runs per graph per method
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Comma-separated method names (suffix _rw / _sym selects
    /// normalization, e.g. skew_f_rw)
    #[arg(long, default_value = "skew_f", value_delimiter = ',')]
    methods: Vec<String>,
    /// Cut count for top trade flow (pattern-dependent default)
    #[arg(long)]
    c_cuts: Option<usize>,
    /// Emit SVG line charts alongside the CSVs
    #[arg(long)]
    plot: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig, Error> {
        let pattern: MetaPattern = self.pattern.parse()?;
        let mut methods = Vec::new();
        for m in &self.methods {
            let (name, norm) = if let Some(base) = m.strip_suffix("_rw") {
                (base, NormTag::Rw)
            } else if let Some(base) = m.strip_suffix("_sym") {
                (base, NormTag::Sym)
            } else {
                (m.as_str(), NormTag::None)
            };
            let mut spec = ClusterSpec::new(name.parse()?, self.k);
            spec.normalization = norm;
            if spec.method == Method::SkewR {
                spec.l_override = Some(2);
            }
            methods.push(spec);
        }
        Ok(SweepConfig {
            pattern,
            n: self.n,
            k: self.k,
            sizes: vec![],
            p_values: self.p.clone(),
            mu_values: self.mu.clone(),
            graphs_per_cell: self.graphs,
            runs_per_graph: self.runs,
            methods,
            c_cuts: self.c_cuts,
            seed: self.seed,
            out_dir: self.out.clone(),
            plot: self.plot,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write DSBM instances (edge list + truth TSV pairs) and a manifest
    Generate(SweepArgs),
    /// Run methods over a DSBM grid; write raw/aggregate CSVs
    Sweep(SweepArgs),
    /// Timing table on one DSBM instance, with speedups vs the dense
    /// baseline
    Timing {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, short, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        runs: usize,
        #[arg(
            long,
            default_value = "skew_f,herm,herm_dense,dd_sym,svd_m",
            value_delimiter = ','
        )]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cluster one graph file; write a partition TSV and a JSON report
    Cluster {
        /// Edge-list file
        graph: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: String,
        /// Ignore weight columns; every edge gets weight 1
        #[arg(long)]
        unweighted: bool,
        #[command(flatten)]
        method: MethodArgs,
        /// Ground-truth labels (vertex<TAB>cluster) for ARI
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Cut count for the top-c scores (default: all pairs)
        #[arg(long)]
        c_cuts: Option<usize>,
        /// Keep the best of this many seeded runs by top trade flow
        #[arg(long, default_value_t = 1)]
        best_of: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print leading singular values of the net-flow matrix
    Svd {
        graph: PathBuf,
        #[arg(long, default_value = "tsv")]
        format: String,
        #[arg(long)]
        unweighted: bool,
        /// How many singular values
        #[arg(long, default_value_t = 12)]
        count: usize,
        #[arg(long, default_value = "none")]
        norm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::RwNotSupported => 1,
        Error::Parse { .. }
        | Error::Io(_)
        | Error::Serialize(_)
        | Error::IndexOutOfRange { .. }
        | Error::ZeroDegree { .. } => 2,
        Error::NoConvergence { .. }
        | Error::PairMismatch { .. }
        | Error::NotSymmetric { .. }
        | Error::DenseGuard { .. } => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(args) => {
            let files = bench::cmd_generate(&args.config()?)?;
            println!("wrote {} files to {}", files.len(), args.out.display());
        }
        Command::Sweep(args) => {
            let config = args.config()?;
            let (rows, agg) = bench::cmd_sweep(&config)?;
            let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
            println!(
                "{} runs ({} failed), {} aggregate cells -> {}",
                rows.len(),
                failures,
                agg.len(),
                config.out_dir.display()
            );
        }
        Command::Timing {
            n,
            k,
            p,
            runs,
            methods,
            seed,
            out,
        } => {
            let mut specs = Vec::new();
            for m in &methods {
                let mut spec = ClusterSpec::new(m.parse()?, k);
                if spec.method == Method::SkewR {
                    spec.l_override = Some(2);
                }
                specs.push(spec);
            }
            let rows = bench::cmd_timing(&TimingConfig {
                n,
                k,
                p,
                runs,
                methods: specs,
                seed,
                out_dir: out.clone(),
            })?;
            println!(
                "{:<12} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}",
                "alg", "setup_ms", "embed_ms", "kmeans_ms", "total_ms", "speedup", "dim"
            );
            for r in &rows {
                println!(
                    "{:<12} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>8} {:>8}",
                    r.alg,
                    r.setup_ms,
                    r.embed_ms,
                    r.kmeans_ms,
                    r.total_ms,
                    r.speedup_vs_herm
                        .map_or("-".to_string(), |s| format!("{s:.2}")),
                    r.embed_dim
                );
            }
        }
        Command::Cluster {
            graph,
            format,
            unweighted,
            method,
            truth,
            c_cuts,
            best_of,
            seed,
            out,
        } => {
            let spec = method.spec(seed)?;
            let report = bench::cmd_cluster(
                &graph,
                parse_format(&format)?,
                unweighted,
                &spec,
                truth.as_deref(),
                c_cuts,
                best_of,
                &out,
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Svd {
            graph,
            format,
            unweighted,
            count,
            norm,
            seed,
        } => {
            let sigma = bench::cmd_svd(
                &graph,
                parse_format(&format)?,
                unweighted,
                count,
                parse_norm(&norm)?,
                seed,
            )?;
            for (i, s) in sigma.iter().enumerate() {
                println!("{}\t{s:.12e}", i + 1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
