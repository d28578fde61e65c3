use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use wlot_core::kernels::{gram_matrix, psd_check, KernelKind};
use wlot_core::learning::{
    batch_learn, sgd_learn, BranchRouting, ConstraintConfig, LearnOutcome, LossConfig, SgdConfig, WeightsFile,
};
use wlot_core::synthetic::{generate_synthetic_dataset, NoiseConfig};
use wlot_core::tu::{parse_tu_dataset, write_tu_dataset};
use wlot_core::{Graph, GraphDataset, WlRefinement};
use wlot_harness::cv::{CvConfig, Grids, LearningSettings, SplitSettings};
use wlot_harness::experiments::{
    run_benchmark, run_runtime_experiment, run_synthetic_experiment, RuntimeConfig, SyntheticConfig, SYNTHETIC_MU,
};

mod output;

use output::{csv_bytes, sidecar_path, write_atomic, write_json};

#[derive(Parser, Debug)]
#[command(name = "wlot", version, about = "WL graph kernels with learned subtree-pattern weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Print dataset statistics
    Stats,
    /// Compute a Gram matrix (CSV and LIBSVM precomputed format)
    Kernel,
    /// Learn subtree-pattern weights
    Learn,
    /// Run one of the experiments
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
    },
    /// Write a generated motif dataset as TU-format train and test directories
    Generate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExperimentName {
    Synthetic,
    Benchmark,
    Runtime,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Wl,
    Wloa,
    Wwl,
    Weighted,
}

impl From<KindArg> for KernelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Wl => KernelKind::WlSubtree,
            KindArg::Wloa => KernelKind::WlOa,
            KindArg::Wwl => KernelKind::Wwl,
            KindArg::Weighted => KernelKind::Weighted,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Variant {
    Sgd,
    Batch,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Opts {
    /// TU dataset directory (or a name under ./data), or `synthetic`
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// Kernel kind(s), comma separated
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    kind: Vec<KindArg>,
    /// WL iterations (a list for experiments)
    #[arg(long = "H", global = true, value_delimiter = ',')]
    h: Vec<usize>,
    /// Laplacian kernel parameter(s)
    #[arg(long, global = true, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// SVM regularization grid
    #[arg(long = "C", global = true, value_delimiter = ',')]
    c: Vec<f64>,
    /// Constraint radius (a list for experiments)
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, global = true, default_value_t = 1.0)]
    alpha1: f64,
    #[arg(long, global = true, default_value_t = 0.5)]
    alpha2: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    sigma: f64,
    /// Learning rate [default: 1e-4; 0.05 for the synthetic experiment]
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Learning iterations
    #[arg(long = "T", global = true, default_value_t = 500)]
    t: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Variant::Sgd)]
    variant: Variant,
    /// Learned weights JSON for the weighted kernel
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// Distance offset b [default: 1 + max eps]
    #[arg(long, global = true)]
    offset: Option<f64>,
    /// Charge same-label pairs with V1 instead of V2
    #[arg(long, global = true)]
    literal_routing: bool,
    /// Outer CV folds
    #[arg(long, global = true, default_value_t = 10)]
    folds: usize,
    /// Outer CV repeats
    #[arg(long, global = true, default_value_t = 10)]
    repeats: usize,
    /// Generated datasets in the synthetic experiment
    #[arg(long, global = true, default_value_t = 10)]
    datasets: usize,
    /// Graphs per template in generated data
    #[arg(long, global = true, default_value_t = 20)]
    per_group: usize,
    /// Dataset sizes for the runtime experiment
    #[arg(long = "N", global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// Resolved settings echoed into every artifact.
#[derive(Debug, Clone, Serialize)]
struct RunConfig<'a> {
    command: &'a Command,
    #[serde(flatten)]
    opts: &'a Opts,
    version: &'static str,
}

impl Opts {
    fn loss(&self) -> Result<LossConfig> {
        let l = LossConfig {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            sigma: self.sigma,
        };
        l.validate()?;
        Ok(l)
    }

    fn routing(&self) -> BranchRouting {
        if self.literal_routing {
            BranchRouting::Literal
        } else {
            BranchRouting::ByObjective
        }
    }

    fn single<T: Copy + std::fmt::Debug>(values: &[T], default: T, flag: &str) -> Result<T> {
        match values {
            [] => Ok(default),
            [v] => Ok(*v),
            more => bail!("--{flag} takes a single value here, got {more:?}"),
        }
    }

    fn dataset(&self) -> Result<GraphDataset> {
        let spec = self.dataset.as_deref().context("--dataset is required")?;
        if spec == "synthetic" {
            let (train, test) = generate_synthetic_dataset(self.seed, self.per_group)?;
            let graphs: Vec<Graph> = train.graphs().iter().chain(test.graphs()).cloned().collect();
            return Ok(GraphDataset::new("synthetic", graphs)?);
        }
        let mut dir = PathBuf::from(spec);
        if !dir.is_dir() && Path::new("data").join(spec).is_dir() {
            dir = Path::new("data").join(spec);
        }
        let name = dir
            .file_name()
            .with_context(|| format!("cannot derive a dataset name from {spec:?}"))?
            .to_string_lossy()
            .into_owned();
        Ok(parse_tu_dataset(&dir, &name)?)
    }

    fn grids(&self, default_h: Vec<usize>) -> Grids {
        let d = Grids::default();
        let or = |v: &Vec<f64>, dflt: Vec<f64>| if v.is_empty() { dflt } else { v.clone() };
        Grids {
            iterations: if self.h.is_empty() { default_h } else { self.h.clone() },
            c: or(&self.c, d.c),
            gamma: or(&self.gamma, d.gamma),
            eps: or(&self.eps, d.eps),
        }
    }

    fn learning(&self, default_mu: f64) -> Result<LearningSettings> {
        Ok(LearningSettings {
            loss: self.loss()?,
            mu: self.mu.unwrap_or(default_mu),
            iterations: self.t,
            routing: self.routing(),
            offset: self.offset,
        })
    }
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.opts.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = RunConfig {
        command: &cli.command,
        opts: &cli.opts,
        version: env!("CARGO_PKG_VERSION"),
    };
    match &cli.command {
        Command::Stats => cmd_stats(&cli.opts, &config),
        Command::Kernel => cmd_kernel(&cli.opts, &config),
        Command::Learn => cmd_learn(&cli.opts, &config),
        Command::Experiment { name } => match name {
            ExperimentName::Synthetic => cmd_synthetic(&cli.opts, &config),
            ExperimentName::Benchmark => cmd_benchmark(&cli.opts, &config),
            ExperimentName::Runtime => cmd_runtime(&cli.opts, &config),
        },
        Command::Generate => cmd_generate(&cli.opts),
    }
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig<'a>,
    #[serde(flatten)]
    body: T,
}

fn write_with_sidecar(path: &Path, bytes: &[u8], config: &RunConfig, extra: serde_json::Value) -> Result<()> {
    write_json(
        &sidecar_path(path),
        &WithConfig {
            config,
            body: extra,
        },
    )?;
    write_atomic(path, bytes)
}

fn cmd_stats(opts: &Opts, config: &RunConfig) -> Result<()> {
    let ds = opts.dataset()?;
    let s = ds.stats()?;
    let classes: Vec<String> = s.class_counts.iter().rev().map(|(c, n)| format!("{c:+}:{n}")).collect();
    println!("dataset\tgraphs\tclasses\tavg_nodes\tavg_edges\tnode_labels");
    println!(
        "{}\t{}\t{}\t{:.1}\t{:.1}\t{}",
        ds.name(),
        s.n_graphs,
        classes.join(" "),
        s.avg_nodes,
        s.avg_directed_edges,
        s.n_node_labels
    );
    if opts.out != Path::new(".") {
        write_json(
            &opts.out.join(format!("{}_stats.json", ds.name())),
            &WithConfig { config, body: &s },
        )?;
    }
    Ok(())
}

fn cmd_kernel(opts: &Opts, config: &RunConfig) -> Result<()> {
    let ds = opts.dataset()?;
    let kind: KernelKind = Opts::single(&opts.kind, KindArg::Wwl, "kind")?.into();
    let h = Opts::single(&opts.h, 2, "H")?;
    let gamma = Opts::single(&opts.gamma, 0.01, "gamma")?;
    let r = WlRefinement::refine(&ds, h)?;
    let weights = match (kind, &opts.weights) {
        (KernelKind::Weighted, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: WeightsFile = serde_json::from_str::<serde_json::Value>(&text)
                .and_then(|v| serde_json::from_value(v.get("learned").cloned().unwrap_or(v)))
                .with_context(|| format!("parsing {}", path.display()))?;
            Some(file.to_weights(&r)?)
        }
        (KernelKind::Weighted, None) => bail!("--kind weighted needs --weights <file>"),
        _ => None,
    };
    let k = gram_matrix(kind, &r, weights.as_ref(), gamma)?;
    let psd = psd_check(&k.matrix, 1e-8);
    println!(
        "{} kernel on {} graphs: min eigenvalue {:.6e} ({})",
        kind.name(),
        k.n(),
        psd.min_eigenvalue,
        if psd.is_psd { "PSD within 1e-8" } else { "NOT PSD within 1e-8" }
    );
    let stem = format!("{}_{}_H{h}", ds.name(), kind.name());
    let meta = serde_json::json!({
        "kernel": k.meta,
        "min_eigenvalue": psd.min_eigenvalue,
        "n": k.n(),
    });
    let mut csv = Vec::new();
    k.write_csv(&mut csv)?;
    let mut svm = Vec::new();
    k.write_libsvm(&ds.class_labels(), &mut svm)?;
    write_with_sidecar(&opts.out.join(format!("{stem}.csv")), &csv, config, meta.clone())?;
    write_with_sidecar(&opts.out.join(format!("{stem}.libsvm")), &svm, config, meta)?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    loss: f64,
}

fn cmd_learn(opts: &Opts, config: &RunConfig) -> Result<()> {
    let ds = opts.dataset()?;
    let h = Opts::single(&opts.h, 2, "H")?;
    let eps = Opts::single(&opts.eps, 0.5, "eps")?;
    let loss = opts.loss()?;
    let r = WlRefinement::refine(&ds, h)?;
    let sgd = SgdConfig {
        mu: opts.mu.unwrap_or(SgdConfig::default().mu),
        iterations: opts.t,
        seed: opts.seed,
        routing: opts.routing(),
    };
    let constraint = ConstraintConfig {
        radii: vec![eps; h],
        offset: opts.offset,
    };
    let idx: Vec<usize> = (0..ds.len()).collect();
    let LearnOutcome { weights, trace, .. } = match opts.variant {
        Variant::Sgd => sgd_learn(&r, &idx, &loss, &sgd, &constraint)?,
        Variant::Batch => batch_learn(&r, &idx, &loss, &sgd, &constraint)?,
    };
    let file = WeightsFile::from_weights(&weights, &r)?;
    let moved = file.weights.iter().filter(|e| e.weight != 1.0).count();
    println!(
        "learned {} weights over H={h} ({moved} moved from 1); final loss {:.6}",
        file.weights.len(),
        trace.last().copied().unwrap_or(f64::NAN)
    );
    write_json(
        &opts.out.join("weights.json"),
        &WithConfig {
            config,
            body: serde_json::json!({ "learned": file }),
        },
    )?;
    let rows: Vec<TraceRow> = trace.iter().enumerate().map(|(step, &loss)| TraceRow { step, loss }).collect();
    write_with_sidecar(&opts.out.join("loss_trace.csv"), &csv_bytes(&rows)?, config, serde_json::json!({}))?;
    Ok(())
}

#[derive(Serialize)]
struct SyntheticRow {
    run: usize,
    dataset_seed: u64,
    wwl_accuracy: f64,
    weighted_accuracy: f64,
    motif_weight: Option<f64>,
    median_weight: f64,
}

fn cmd_synthetic(opts: &Opts, config: &RunConfig) -> Result<()> {
    let cfg = SyntheticConfig {
        seed: opts.seed,
        datasets: opts.datasets,
        per_group: opts.per_group,
        noise: NoiseConfig::default(),
        split: SplitSettings {
            grids: opts.grids(vec![2]),
            learning: opts.learning(SYNTHETIC_MU)?,
            ..SplitSettings::default()
        },
    };
    let report = run_synthetic_experiment(&cfg)?;
    println!(
        "WWL {:.2}%  weighted {:.2}%  gap {:+.2} points  motif weight above median in {}/{} runs",
        100.0 * report.mean_wwl,
        100.0 * report.mean_weighted,
        report.gap_points,
        report.motif_above_median,
        report.runs.len()
    );
    let rows: Vec<SyntheticRow> = report
        .runs
        .iter()
        .enumerate()
        .map(|(run, r)| SyntheticRow {
            run,
            dataset_seed: r.dataset_seed,
            wwl_accuracy: r.wwl_accuracy,
            weighted_accuracy: r.weighted_accuracy,
            motif_weight: r.motif_weight,
            median_weight: r.median_weight,
        })
        .collect();
    write_json(&opts.out.join("synthetic.json"), &WithConfig { config, body: &report })?;
    write_with_sidecar(&opts.out.join("synthetic.csv"), &csv_bytes(&rows)?, config, serde_json::json!({}))?;
    Ok(())
}

#[derive(Serialize)]
struct BenchmarkRow {
    kernel: &'static str,
    mean: f64,
    std: f64,
    folds: usize,
    leak_free: bool,
}

#[derive(Serialize)]
struct FoldRow {
    kernel: &'static str,
    repeat: usize,
    fold: usize,
    accuracy: f64,
    h: usize,
    c: f64,
    gamma: Option<f64>,
    eps: Option<f64>,
}

fn cmd_benchmark(opts: &Opts, config: &RunConfig) -> Result<()> {
    let ds = opts.dataset()?;
    let kinds: Vec<KernelKind> = if opts.kind.is_empty() {
        vec![KernelKind::WlSubtree, KernelKind::WlOa, KernelKind::Wwl, KernelKind::Weighted]
    } else {
        opts.kind.iter().map(|&k| k.into()).collect()
    };
    let cfg = CvConfig {
        folds: opts.folds,
        repeats: opts.repeats,
        seed: opts.seed,
        split: SplitSettings {
            grids: opts.grids((1..=6).collect()),
            learning: opts.learning(SgdConfig::default().mu)?,
            ..SplitSettings::default()
        },
    };
    let report = run_benchmark(&ds, &kinds, &cfg)?;
    let mut table = String::new();
    for r in &report.results {
        writeln!(table, "{:<9} {:6.2} +- {:5.2}", r.kind.name(), 100.0 * r.mean, 100.0 * r.std)?;
    }
    for c in &report.comparisons {
        writeln!(
            table,
            "{} vs {}: t = {:.3}, one-sided p = {:.4}",
            c.better.name(),
            c.baseline.name(),
            c.ttest.t,
            c.ttest.p_value
        )?;
    }
    print!("{table}");
    let rows: Vec<BenchmarkRow> = report
        .results
        .iter()
        .map(|r| BenchmarkRow {
            kernel: r.kind.name(),
            mean: r.mean,
            std: r.std,
            folds: r.folds.len(),
            leak_free: r.leak_free(),
        })
        .collect();
    let folds: Vec<FoldRow> = report
        .results
        .iter()
        .flat_map(|r| {
            r.folds.iter().map(move |f| FoldRow {
                kernel: r.kind.name(),
                repeat: f.repeat,
                fold: f.fold,
                accuracy: f.accuracy,
                h: f.selection.h,
                c: f.selection.c,
                gamma: f.selection.gamma,
                eps: f.selection.eps,
            })
        })
        .collect();
    let name = ds.name();
    write_json(&opts.out.join(format!("benchmark_{name}.json")), &WithConfig { config, body: &report })?;
    write_with_sidecar(
        &opts.out.join(format!("benchmark_{name}.csv")),
        &csv_bytes(&rows)?,
        config,
        serde_json::json!({}),
    )?;
    write_with_sidecar(
        &opts.out.join(format!("benchmark_{name}_folds.csv")),
        &csv_bytes(&folds)?,
        config,
        serde_json::json!({}),
    )?;
    Ok(())
}

fn cmd_runtime(opts: &Opts, config: &RunConfig) -> Result<()> {
    let d = RuntimeConfig::default();
    let cfg = RuntimeConfig {
        seed: opts.seed,
        n_grid: if opts.n.is_empty() { d.n_grid } else { opts.n.clone() },
        h_grid: if opts.h.is_empty() { d.h_grid } else { opts.h.clone() },
        loss: opts.loss()?,
        mu: opts.mu.unwrap_or(d.mu),
        iterations: opts.t,
        eps: Opts::single(&opts.eps, d.eps, "eps")?,
        ..d
    };
    let rows = run_runtime_experiment(&cfg)?;
    println!("variant\tN\tH\tseconds");
    for r in &rows {
        println!("{}\t{}\t{}\t{:.4}", r.variant, r.n, r.h, r.seconds);
    }
    write_with_sidecar(
        &opts.out.join("runtime.csv"),
        &csv_bytes(&rows)?,
        config,
        serde_json::to_value(&cfg)?,
    )?;
    Ok(())
}

fn cmd_generate(opts: &Opts) -> Result<()> {
    let (train, test) = generate_synthetic_dataset(opts.seed, opts.per_group)?;
    for (ds, name) in [(&train, "synthetic_train"), (&test, "synthetic_test")] {
        let dir = opts.out.join(name);
        write_tu_dataset(ds, &dir, name)?;
        info!("wrote {} graphs to {}", ds.len(), dir.display());
    }
    println!("wrote {} train and {} test graphs under {}", train.len(), test.len(), opts.out.display());
    Ok(())
}
