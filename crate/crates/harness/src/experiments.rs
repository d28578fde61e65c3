//! Experiment drivers: motif data, cross-validated benchmark, learning runtime.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use wlot_core::graph::compute_stats;
use wlot_core::kernels::KernelKind;
use wlot_core::learning::{batch_learn, sgd_learn, ConstraintConfig, LossConfig, SgdConfig};
use wlot_core::seeds::{streams, sub_seed};
use wlot_core::synthetic::{builtin_templates, generate_from_templates, generate_mixed, NoiseConfig, Template};
use wlot_core::wl::WlRefinement;
use wlot_core::{DatasetStats, GraphDataset, Result};

use crate::cv::{cross_validate, evaluate_split, CvConfig, CvResult, Grids, LearningSettings, Selection, SplitSettings};
use crate::stats::{mean, paired_ttest_onesided, TTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub datasets: usize,
    pub per_group: usize,
    pub noise: NoiseConfig,
    pub split: SplitSettings,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            datasets: 10,
            per_group: 20,
            noise: NoiseConfig::default(),
            split: SplitSettings {
                grids: Grids {
                    iterations: vec![2],
                    ..Grids::default()
                },
                learning: LearningSettings {
                    mu: SYNTHETIC_MU,
                    ..LearningSettings::default()
                },
                ..SplitSettings::default()
            },
        }
    }
}

/// Learning rate for the motif data. The real-data default of 1e-4 moves
/// each weight by at most about 0.03 in 500 steps, which leaves the kernel
/// indistinguishable from the unweighted one on graphs this small.
pub const SYNTHETIC_MU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelWeight {
    pub label_key: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRun {
    pub dataset_seed: u64,
    pub wwl_accuracy: f64,
    pub weighted_accuracy: f64,
    pub wwl_selection: Selection,
    pub weighted_selection: Selection,
    /// Learned weights at h = 1, heaviest first.
    pub h1_weights: Vec<LabelWeight>,
    /// Largest weight among the h = 1 patterns of a motif node.
    pub motif_weight: Option<f64>,
    pub median_weight: f64,
}

impl SyntheticRun {
    pub fn motif_above_median(&self) -> bool {
        self.motif_weight.is_some_and(|w| w > self.median_weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticReport {
    pub config: SyntheticConfig,
    pub runs: Vec<SyntheticRun>,
    pub mean_wwl: f64,
    pub mean_weighted: f64,
    /// Mean accuracy difference in percentage points.
    pub gap_points: f64,
    pub motif_above_median: usize,
}

/// Whether an h = 1 pattern `(parent,[neighbors])` can belong to a motif node:
/// a 1 next to two 0s, or a 0 next to both a 1 and a 2.
pub fn is_motif_pattern(parent: u32, neighbors: &[u32]) -> bool {
    match parent {
        1 => neighbors.iter().filter(|&&l| l == 0).count() >= 2,
        0 => neighbors.contains(&1) && neighbors.contains(&2),
        _ => false,
    }
}

fn median(mut x: Vec<f64>) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.sort_by(f64::total_cmp);
    let m = x.len() / 2;
    if x.len() % 2 == 1 {
        x[m]
    } else {
        (x[m - 1] + x[m]) / 2.0
    }
}

/// Trains WWL and the weighted kernel on groups 1-4 and tests on groups 5-8,
/// over several independently generated datasets.
pub fn run_synthetic_experiment(cfg: &SyntheticConfig) -> Result<SyntheticReport> {
    run_synthetic_with_templates(cfg, &builtin_templates())
}

/// [`run_synthetic_experiment`] on a caller-supplied set of eight templates.
pub fn run_synthetic_with_templates(cfg: &SyntheticConfig, templates: &[Template]) -> Result<SyntheticReport> {
    let mut runs = Vec::with_capacity(cfg.datasets);
    for k in 0..cfg.datasets {
        let dataset_seed = sub_seed(cfg.seed, streams::GENERATOR, k as u64);
        let (train, test) = generate_from_templates(templates, dataset_seed, cfg.per_group, &cfg.noise)?;
        let split_seed = sub_seed(cfg.seed, streams::INNER_FOLDS, k as u64);
        let wwl = evaluate_split(train.graphs(), test.graphs(), KernelKind::Wwl, &cfg.split, split_seed)?;
        let weighted = evaluate_split(train.graphs(), test.graphs(), KernelKind::Weighted, &cfg.split, split_seed)?;
        let w = weighted.weights.as_ref().expect("weighted recipe returns weights");
        let r = &weighted.refinement;
        let mut h1: Vec<LabelWeight> = w
            .block(1)
            .iter()
            .enumerate()
            .map(|(id, &weight)| LabelWeight {
                label_key: r.pattern_key(1, id as u32).expect("id within alphabet"),
                weight,
            })
            .collect();
        // only patterns seen in training carry learned information
        let n_train_labels = WlRefinement::refine_graphs(train.graphs(), 1)?.alphabet(1).len();
        h1.truncate(n_train_labels);
        let motif_weight = (0..h1.len())
            .filter(|&id| {
                let (p, nb) = r.alphabet(1).signature(id as u32).expect("id within alphabet");
                is_motif_pattern(*p, nb)
            })
            .map(|id| h1[id].weight)
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
        let median_weight = median(h1.iter().map(|l| l.weight).collect());
        h1.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        info!(
            "synthetic run {k}: WWL {:.3}, weighted {:.3}",
            wwl.accuracy, weighted.accuracy
        );
        runs.push(SyntheticRun {
            dataset_seed,
            wwl_accuracy: wwl.accuracy,
            weighted_accuracy: weighted.accuracy,
            wwl_selection: wwl.selection,
            weighted_selection: weighted.selection,
            h1_weights: h1,
            motif_weight,
            median_weight,
        });
    }
    let mean_wwl = mean(&runs.iter().map(|r| r.wwl_accuracy).collect::<Vec<_>>());
    let mean_weighted = mean(&runs.iter().map(|r| r.weighted_accuracy).collect::<Vec<_>>());
    Ok(SyntheticReport {
        config: cfg.clone(),
        motif_above_median: runs.iter().filter(|r| r.motif_above_median()).count(),
        runs,
        mean_wwl,
        mean_weighted,
        gap_points: 100.0 * (mean_weighted - mean_wwl),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub better: KernelKind,
    pub baseline: KernelKind,
    /// One-sided test on the per-repeat mean accuracies.
    pub ttest: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub stats: DatasetStats,
    pub config: CvConfig,
    pub results: Vec<CvResult>,
    pub comparisons: Vec<Comparison>,
}

/// Nested CV of each recipe on one dataset, with the weighted kernel tested
/// against every other recipe.
pub fn run_benchmark(ds: &GraphDataset, kinds: &[KernelKind], cfg: &CvConfig) -> Result<BenchmarkReport> {
    let mut results = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let start = Instant::now();
        let res = cross_validate(ds, kind, cfg)?;
        info!(
            "{}: {:.2} +- {:.2} ({:.1}s)",
            kind.name(),
            100.0 * res.mean,
            100.0 * res.std,
            start.elapsed().as_secs_f64()
        );
        results.push(res);
    }
    let mut comparisons = Vec::new();
    if let Some(w) = results.iter().find(|r| r.kind == KernelKind::Weighted) {
        for other in results.iter().filter(|r| r.kind != KernelKind::Weighted) {
            if w.repeat_means.len() >= 2 {
                comparisons.push(Comparison {
                    better: KernelKind::Weighted,
                    baseline: other.kind,
                    ttest: paired_ttest_onesided(&w.repeat_means, &other.repeat_means)?,
                });
            }
        }
    }
    Ok(BenchmarkReport {
        dataset: ds.name().to_string(),
        stats: compute_stats(ds)?,
        config: cfg.clone(),
        results,
        comparisons,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub h_grid: Vec<usize>,
    pub default_n: usize,
    pub default_h: usize,
    pub loss: LossConfig,
    pub mu: f64,
    pub iterations: usize,
    pub eps: f64,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        let sgd = SgdConfig::default();
        RuntimeConfig {
            seed: 0,
            n_grid: vec![50, 100, 200, 400],
            h_grid: vec![1, 2, 3, 4],
            default_n: 100,
            default_h: 2,
            loss: LossConfig::default(),
            mu: sgd.mu,
            iterations: sgd.iterations,
            eps: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub variant: String,
    pub n: usize,
    pub h: usize,
    pub seconds: f64,
    pub final_loss: f64,
}

/// Wall time of stochastic and full-batch learning over an `N` sweep at the
/// default `H` and an `H` sweep at the default `N`.
pub fn run_runtime_experiment(cfg: &RuntimeConfig) -> Result<Vec<RuntimeRow>> {
    let mut settings: Vec<(usize, usize)> = cfg.n_grid.iter().map(|&n| (n, cfg.default_h)).collect();
    for &h in &cfg.h_grid {
        if !settings.contains(&(cfg.default_n, h)) {
            settings.push((cfg.default_n, h));
        }
    }
    let mut rows = Vec::new();
    for (n, h) in settings {
        let ds = generate_mixed(sub_seed(cfg.seed, streams::GENERATOR, n as u64), n)?;
        let r = WlRefinement::refine(&ds, h)?;
        let idx: Vec<usize> = (0..n).collect();
        let constraint = ConstraintConfig::uniform(cfg.eps, h);
        let sgd = SgdConfig {
            mu: cfg.mu,
            iterations: cfg.iterations,
            seed: sub_seed(cfg.seed, streams::SGD, n as u64),
            ..SgdConfig::default()
        };
        for variant in ["sgd", "batch"] {
            let start = Instant::now();
            let out = if variant == "sgd" {
                sgd_learn(&r, &idx, &cfg.loss, &sgd, &constraint)?
            } else {
                batch_learn(&r, &idx, &cfg.loss, &sgd, &constraint)?
            };
            let seconds = start.elapsed().as_secs_f64();
            info!("{variant} N={n} H={h}: {seconds:.3}s");
            rows.push(RuntimeRow {
                variant: variant.to_string(),
                n,
                h,
                seconds,
                final_loss: out.trace.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(rows)
}
