//! Nested cross-validation of the four kernel recipes.
//!
//! For every outer split the WL dictionaries are built on the training graphs
//! alone and the held-out graphs are embedded against them afterwards.
//! Hyperparameters are chosen by an inner stratified CV on the training part,
//! and weight learning only ever sees training graphs of the current (inner or
//! outer) split.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use log::debug;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wlot_core::kernels::{KernelKind, SquareMatrix, WeightVector};
use wlot_core::learning::{sgd_learn, BranchRouting, ConstraintConfig, LossConfig, SgdConfig};
use wlot_core::seeds::{stream_rng, streams, sub_seed};
use wlot_core::wl::WlRefinement;
use wlot_core::{ClassLabel, Error, Graph, GraphDataset, Result};

use crate::stats::{mean, std_dev};
use crate::svm::{accuracy, SvmOptions, SvmProblem};

/// Hyperparameter grids searched by the inner CV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub iterations: Vec<usize>,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            iterations: (1..=6).collect(),
            c: (-3..=3).map(|e| 10f64.powi(e)).collect(),
            gamma: vec![1e-4, 1e-3, 1e-2],
            eps: vec![0.1, 0.5, 1.0],
        }
    }
}

impl Grids {
    fn validate(&self, kind: KernelKind) -> Result<()> {
        let empty = |name: &str| Error::InvalidArgument(format!("empty {name} grid"));
        if self.iterations.is_empty() {
            return Err(empty("H"));
        }
        if self.iterations.contains(&0) {
            return Err(Error::InvalidArgument("H grid must be >= 1".into()));
        }
        if self.c.is_empty() {
            return Err(empty("C"));
        }
        if kind.uses_gamma() && self.gamma.is_empty() {
            return Err(empty("gamma"));
        }
        if kind == KernelKind::Weighted && self.eps.is_empty() {
            return Err(empty("eps"));
        }
        Ok(())
    }
}

/// Settings of the weight-learning step inside the weighted recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningSettings {
    pub loss: LossConfig,
    pub mu: f64,
    pub iterations: usize,
    pub routing: BranchRouting,
    /// `b`; `None` means `1 + eps`.
    pub offset: Option<f64>,
}

impl Default for LearningSettings {
    fn default() -> Self {
        let sgd = SgdConfig::default();
        LearningSettings {
            loss: LossConfig::default(),
            mu: sgd.mu,
            iterations: sgd.iterations,
            routing: sgd.routing,
            offset: None,
        }
    }
}

/// Everything one train/test evaluation needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSettings {
    pub grids: Grids,
    pub inner_folds: usize,
    pub learning: LearningSettings,
    pub svm_eps: f64,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            grids: Grids::default(),
            inner_folds: 5,
            learning: LearningSettings::default(),
            svm_eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub split: SplitSettings,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            repeats: 10,
            seed: 0,
            split: SplitSettings::default(),
        }
    }
}

/// Winning grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub h: usize,
    pub c: f64,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    /// Mean inner-CV accuracy of the winner.
    pub inner_accuracy: f64,
}

/// Which graphs fed each stage of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAudit {
    pub test_fingerprint: u64,
    pub test_ids: BTreeSet<usize>,
    pub learning_ids: BTreeSet<usize>,
    pub selection_ids: BTreeSet<usize>,
}

impl SplitAudit {
    pub fn leak_free(&self) -> bool {
        self.test_ids.is_disjoint(&self.learning_ids) && self.test_ids.is_disjoint(&self.selection_ids)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub accuracy: f64,
    pub selection: Selection,
    /// Diagonal shift the indefiniteness guard applied to the final kernel.
    pub jitter: f64,
    /// Weights of the final model (weighted recipe only).
    pub weights: Option<WeightVector>,
    /// Refinement used for the final model: training graphs first, then test graphs.
    pub refinement: WlRefinement,
    pub predictions: Vec<ClassLabel>,
    pub audit: SplitAudit,
}

/// Stratified assignment of items to `k` folds. Items are ordered by `keys`
/// before shuffling, so the result does not depend on input order.
pub fn stratified_folds(keys: &[usize], labels: &[ClassLabel], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if keys.len() != labels.len() {
        return Err(Error::InvalidArgument("keys and labels differ in length".into()));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    let classes: BTreeSet<ClassLabel> = labels.iter().copied().collect();
    let mut fold = vec![0; keys.len()];
    let mut next = 0;
    for class in classes {
        let mut members: Vec<usize> = order.iter().copied().filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InvalidDataset(format!(
                "{k} folds exceed the {} members of class {class}",
                members.len()
            )));
        }
        members.shuffle(rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Per-iteration pairwise statistics for the unweighted kernels.
struct LevelTables {
    /// `[h][i * n + j]` for shared mass, count dot product and count intersection.
    shared: Vec<Vec<f64>>,
    dot: Vec<Vec<f64>>,
    overlap: Vec<Vec<f64>>,
    n: usize,
}

impl LevelTables {
    fn compute(r: &WlRefinement) -> Result<Self> {
        let n = r.num_graphs();
        let hmax = r.iterations();
        let rows: Vec<Vec<[Vec<f64>; 3]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = r.histogram(i)?;
                (0..n)
                    .map(|j| {
                        let b = r.histogram(j)?;
                        let (na, nb) = (a.n_nodes() as f64, b.n_nodes() as f64);
                        let mut s = vec![0.0; hmax];
                        let mut d = vec![0.0; hmax];
                        let mut o = vec![0.0; hmax];
                        for h in 1..=hmax {
                            let (ca, cb) = (a.counts(h), b.counts(h));
                            let (mut x, mut y) = (0, 0);
                            while x < ca.len() && y < cb.len() {
                                match ca[x].0.cmp(&cb[y].0) {
                                    std::cmp::Ordering::Less => x += 1,
                                    std::cmp::Ordering::Greater => y += 1,
                                    std::cmp::Ordering::Equal => {
                                        let (u, v) = (f64::from(ca[x].1), f64::from(cb[y].1));
                                        s[h - 1] += (u / na).min(v / nb);
                                        d[h - 1] += u * v;
                                        o[h - 1] += u.min(v);
                                        x += 1;
                                        y += 1;
                                    }
                                }
                            }
                        }
                        Ok([s, d, o])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut t = LevelTables {
            shared: vec![vec![0.0; n * n]; hmax],
            dot: vec![vec![0.0; n * n]; hmax],
            overlap: vec![vec![0.0; n * n]; hmax],
            n,
        };
        for (i, row) in rows.into_iter().enumerate() {
            for (j, [s, d, o]) in row.into_iter().enumerate() {
                for h in 0..hmax {
                    t.shared[h][i * n + j] = s[h];
                    t.dot[h][i * n + j] = d[h];
                    t.overlap[h][i * n + j] = o[h];
                }
            }
        }
        Ok(t)
    }

    /// Similarity (WL, WL-OA) or distance (WWL) averaged over iterations `1..=h`.
    fn base(&self, kind: KernelKind, h: usize) -> SquareMatrix {
        let n = self.n;
        let tables = match kind {
            KernelKind::WlSubtree => &self.dot,
            KernelKind::WlOa => &self.overlap,
            _ => &self.shared,
        };
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let avg = tables[..h].iter().map(|t| t[i * n + j]).sum::<f64>() / h as f64;
                let v = if kind == KernelKind::Wwl { (1.0 - avg).max(0.0) } else { avg };
                m.set(i, j, v);
            }
        }
        m
    }
}

/// Sparse shared masses `(h, label, min mass)` of every unordered pair.
pub(crate) struct PairCache {
    n: usize,
    entries: Vec<Vec<(u8, u32, f64)>>,
}

impl PairCache {
    pub(crate) fn compute(r: &WlRefinement) -> Result<Self> {
        let n = r.num_graphs();
        let hmax = r.iterations();
        let rows: Vec<Vec<Vec<(u8, u32, f64)>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = r.histogram(i)?;
                (i..n)
                    .map(|j| {
                        let b = r.histogram(j)?;
                        let (na, nb) = (a.n_nodes() as f64, b.n_nodes() as f64);
                        let mut out = Vec::new();
                        for h in 1..=hmax {
                            let (ca, cb) = (a.counts(h), b.counts(h));
                            let (mut x, mut y) = (0, 0);
                            while x < ca.len() && y < cb.len() {
                                match ca[x].0.cmp(&cb[y].0) {
                                    std::cmp::Ordering::Less => x += 1,
                                    std::cmp::Ordering::Greater => y += 1,
                                    std::cmp::Ordering::Equal => {
                                        let m = (f64::from(ca[x].1) / na).min(f64::from(cb[y].1) / nb);
                                        out.push(((h - 1) as u8, ca[x].0, m));
                                        x += 1;
                                        y += 1;
                                    }
                                }
                            }
                        }
                        Ok(out)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(PairCache {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    /// `b - (1/H) sum_{h <= H} sum_v w_h(v) min(mu(v), nu(v))`.
    pub(crate) fn distance(&self, w: &WeightVector, i: usize, j: usize) -> f64 {
        let h = w.iterations();
        let blocks = w.blocks();
        let mut acc = 0.0;
        for &(lvl, label, m) in &self.entries[self.index(i, j)] {
            let lvl = lvl as usize;
            if lvl >= h {
                break;
            }
            acc += blocks[lvl][label as usize] * m;
        }
        w.offset() - acc / h as f64
    }

    /// Square distance matrix over `idx` followed by the rows of `extra` against `idx`.
    fn distances(&self, w: &WeightVector, idx: &[usize], extra: &[usize]) -> (SquareMatrix, Vec<Vec<f64>>) {
        let m = idx.len();
        let upper: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|a| (a..m).map(|b| self.distance(w, idx[a], idx[b])).collect())
            .collect();
        let mut d = SquareMatrix::zeros(m);
        for (a, row) in upper.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                d.set(a, a + k, v);
                d.set(a + k, a, v);
            }
        }
        let rows = extra
            .par_iter()
            .map(|&e| idx.iter().map(|&t| self.distance(w, e, t)).collect())
            .collect();
        (d, rows)
    }
}

fn laplacian(d: &SquareMatrix, gamma: f64) -> SquareMatrix {
    d.map(|x| (-gamma * x).exp())
}

fn laplacian_rows(rows: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|&x| (-gamma * x).exp()).collect()).collect()
}

fn fingerprint(ids: &BTreeSet<usize>) -> u64 {
    let mut h = DefaultHasher::new();
    ids.hash(&mut h);
    h.finish()
}

/// Grid point in search order; the first best point wins ties.
#[derive(Debug, Clone, Copy)]
struct Point {
    h: usize,
    eps: Option<f64>,
    gamma: Option<f64>,
    c: f64,
}

fn grid_points(kind: KernelKind, g: &Grids) -> Vec<Point> {
    let eps: Vec<Option<f64>> = if kind == KernelKind::Weighted {
        g.eps.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let gamma: Vec<Option<f64>> = if kind.uses_gamma() {
        g.gamma.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for &h in &g.iterations {
        for &e in &eps {
            for &gm in &gamma {
                for &c in &g.c {
                    out.push(Point { h, eps: e, gamma: gm, c });
                }
            }
        }
    }
    out
}

fn learn_weights(
    r_h: &WlRefinement,
    train: &[usize],
    eps: f64,
    settings: &LearningSettings,
    seed: u64,
) -> Result<(WeightVector, BTreeSet<usize>)> {
    let constraint = ConstraintConfig {
        radii: vec![eps; r_h.iterations()],
        offset: settings.offset,
    };
    let sgd = SgdConfig {
        mu: settings.mu,
        iterations: settings.iterations,
        seed,
        routing: settings.routing,
    };
    let out = sgd_learn(r_h, train, &settings.loss, &sgd, &constraint)?;
    Ok((out.weights, out.touched))
}

/// Trains on `train` and scores `test` for every `C`, given the kernel blocks.
fn score_all_c(
    k_train: &SquareMatrix,
    y_train: &[ClassLabel],
    test_rows: &[Vec<f64>],
    y_test: &[ClassLabel],
    cs: &[f64],
    opts: &SvmOptions,
) -> Result<Vec<f64>> {
    let problem = SvmProblem::new(k_train, y_train, opts)?;
    cs.iter()
        .map(|&c| {
            let model = problem.train(c)?;
            Ok(accuracy(&model.predict(test_rows)?.0, y_test))
        })
        .collect()
}

/// Selects hyperparameters on `train_graphs` by inner CV, refits, and scores `test_graphs`.
pub fn evaluate_split(
    train_graphs: &[Graph],
    test_graphs: &[Graph],
    kind: KernelKind,
    settings: &SplitSettings,
    seed: u64,
) -> Result<SplitOutcome> {
    settings.grids.validate(kind)?;
    let hmax = *settings.grids.iterations.iter().max().expect("validated nonempty");
    let mut r = WlRefinement::refine_graphs(train_graphs, hmax)?;
    r.extend(test_graphs);
    let ntr = train_graphs.len();
    let n = r.num_graphs();
    let train: Vec<usize> = (0..ntr).collect();
    let test: Vec<usize> = (ntr..n).collect();
    let y = r.class_labels();
    let y_train: Vec<ClassLabel> = y[..ntr].to_vec();
    let y_test: Vec<ClassLabel> = y[ntr..].to_vec();
    let ids: Vec<usize> = train_graphs.iter().map(Graph::graph_id).collect();

    let inner = stratified_folds(&ids, &y_train, settings.inner_folds, &mut stream_rng(seed, streams::INNER_FOLDS))?;
    let inner_splits: Vec<(Vec<usize>, Vec<usize>)> = (0..settings.inner_folds)
        .map(|f| {
            let fit = (0..ntr).filter(|&i| inner[i] != f).collect();
            let val = (0..ntr).filter(|&i| inner[i] == f).collect();
            (fit, val)
        })
        .collect();

    let points = grid_points(kind, &settings.grids);
    let mut scores = vec![0.0; points.len()];
    let cs = &settings.grids.c;
    let per_c = cs.len();
    let opts = SvmOptions {
        eps: settings.svm_eps,
        ..SvmOptions::default()
    };
    let mut learning_ids = BTreeSet::new();
    let truncated: Vec<WlRefinement> = (1..=hmax).map(|h| r.truncated(h)).collect::<Result<_>>()?;
    let labels_of = |idx: &[usize]| -> Vec<ClassLabel> { idx.iter().map(|&i| y[i]).collect() };

    let final_outcome;
    if kind == KernelKind::Weighted {
        let cache = PairCache::compute(&r)?;
        for (f, (fit, val)) in inner_splits.iter().enumerate() {
            let (y_fit, y_val) = (labels_of(fit), labels_of(val));
            for (block_start, chunk) in points.chunks(per_c * settings.grids.gamma.len()).enumerate() {
                let p = chunk[0];
                let eps = p.eps.expect("weighted points carry eps");
                let seed_k = sub_seed(seed, streams::SGD, (f * points.len() + block_start) as u64);
                let (w, touched) = learn_weights(&truncated[p.h - 1], fit, eps, &settings.learning, seed_k)?;
                learning_ids.extend(touched.iter().map(|&i| ids[i]));
                let (d_fit, d_val) = cache.distances(&w, fit, val);
                for (g, gchunk) in chunk.chunks(per_c).enumerate() {
                    let gamma = gchunk[0].gamma.expect("weighted points carry gamma");
                    let acc = score_all_c(&laplacian(&d_fit, gamma), &y_fit, &laplacian_rows(&d_val, gamma), &y_val, cs, &opts)?;
                    let base = block_start * chunk.len() + g * per_c;
                    for (k, a) in acc.into_iter().enumerate() {
                        scores[base + k] += a;
                    }
                }
            }
        }
        let best = argmax(&scores);
        let p = points[best];
        let eps = p.eps.expect("weighted");
        let gamma = p.gamma.expect("weighted");
        let seed_final = sub_seed(seed, streams::SGD, u64::MAX / 2);
        let (w, touched) = learn_weights(&truncated[p.h - 1], &train, eps, &settings.learning, seed_final)?;
        learning_ids.extend(touched.iter().map(|&i| ids[i]));
        let (d_train, d_test) = cache.distances(&w, &train, &test);
        let problem = SvmProblem::new(&laplacian(&d_train, gamma), &y_train, &opts)?;
        let model = problem.train(p.c)?;
        let (pred, _) = model.predict(&laplacian_rows(&d_test, gamma))?;
        final_outcome = (p, scores[best], problem.jitter, Some(w), pred);
    } else {
        let tables = LevelTables::compute(&r)?;
        let gammas: Vec<Option<f64>> = if kind.uses_gamma() {
            settings.grids.gamma.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for (hi, &h) in settings.grids.iterations.iter().enumerate() {
            let base = tables.base(kind, h);
            for (gi, &gamma) in gammas.iter().enumerate() {
                let k_all = match gamma {
                    Some(g) => laplacian(&base, g),
                    None => base.clone(),
                };
                let full = SvmProblem::new(&k_all.select(&train), &y_train, &opts)?;
                for (fit, val) in &inner_splits {
                    let problem = full.subset(fit)?;
                    let rows = k_all.block(val, fit);
                    let y_val = labels_of(val);
                    let offset = (hi * gammas.len() + gi) * per_c;
                    for (k, &c) in cs.iter().enumerate() {
                        let model = problem.train(c)?;
                        scores[offset + k] += accuracy(&model.predict(&rows)?.0, &y_val);
                    }
                }
            }
        }
        let best = argmax(&scores);
        let p = points[best];
        let base = tables.base(kind, p.h);
        let k_all = match p.gamma {
            Some(g) => laplacian(&base, g),
            None => base,
        };
        let problem = SvmProblem::new(&k_all.select(&train), &y_train, &opts)?;
        let model = problem.train(p.c)?;
        let (pred, _) = model.predict(&k_all.block(&test, &train))?;
        final_outcome = (p, scores[best], problem.jitter, None, pred);
    }

    let (p, score, jitter, weights, predictions) = final_outcome;
    let test_ids: BTreeSet<usize> = test_graphs.iter().map(Graph::graph_id).collect();
    debug!("{kind:?} split: H={} C={} gamma={:?} eps={:?}", p.h, p.c, p.gamma, p.eps);
    Ok(SplitOutcome {
        accuracy: accuracy(&predictions, &y_test),
        selection: Selection {
            h: p.h,
            c: p.c,
            gamma: p.gamma,
            eps: p.eps,
            inner_accuracy: score / settings.inner_folds as f64,
        },
        jitter,
        weights,
        refinement: r,
        predictions,
        audit: SplitAudit {
            test_fingerprint: fingerprint(&test_ids),
            test_ids,
            learning_ids,
            selection_ids: ids.iter().copied().collect(),
        },
    })
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] + 1e-12 {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub n_test: usize,
    pub selection: Selection,
    pub jitter: f64,
    pub leak_free: bool,
    pub test_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: KernelKind,
    pub folds: Vec<FoldResult>,
    /// Mean accuracy of each repeat, in repeat order.
    pub repeat_means: Vec<f64>,
    /// Mean over all folds.
    pub mean: f64,
    /// Standard deviation of the repeat means.
    pub std: f64,
}

impl CvResult {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }

    pub fn leak_free(&self) -> bool {
        self.folds.iter().all(|f| f.leak_free)
    }
}

/// Outer fold of every graph, per repeat.
pub fn outer_assignments(ds: &GraphDataset, folds: usize, repeats: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let ids: Vec<usize> = ds.graphs().iter().map(Graph::graph_id).collect();
    let labels = ds.class_labels();
    let mut rng = stream_rng(seed, streams::FOLDS);
    (0..repeats).map(|_| stratified_folds(&ids, &labels, folds, &mut rng)).collect()
}

/// Repeated stratified k-fold CV with nested model selection.
pub fn cross_validate(ds: &GraphDataset, kind: KernelKind, cfg: &CvConfig) -> Result<CvResult> {
    if cfg.repeats == 0 {
        return Err(Error::InvalidArgument("at least one repeat is required".into()));
    }
    let assignments = outer_assignments(ds, cfg.folds, cfg.repeats, cfg.seed)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|rep| (0..cfg.folds).map(move |f| (rep, f)))
        .collect();
    let folds: Vec<FoldResult> = jobs
        .par_iter()
        .map(|&(rep, f)| {
            let assign = &assignments[rep];
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (g, &a) in ds.graphs().iter().zip(assign) {
                if a == f {
                    test.push(g.clone());
                } else {
                    train.push(g.clone());
                }
            }
            // canonical order so results do not depend on dataset order
            train.sort_by_key(Graph::graph_id);
            test.sort_by_key(Graph::graph_id);
            let split_seed = sub_seed(cfg.seed, streams::INNER_FOLDS, (rep * cfg.folds + f) as u64);
            let out = evaluate_split(&train, &test, kind, &cfg.split, split_seed)?;
            Ok(FoldResult {
                repeat: rep,
                fold: f,
                accuracy: out.accuracy,
                n_test: test.len(),
                selection: out.selection,
                jitter: out.jitter,
                leak_free: out.audit.leak_free(),
                test_fingerprint: out.audit.test_fingerprint,
            })
        })
        .collect::<Result<_>>()?;
    let repeat_means: Vec<f64> = (0..cfg.repeats)
        .map(|rep| mean(&folds.iter().filter(|f| f.repeat == rep).map(|f| f.accuracy).collect::<Vec<_>>()))
        .collect();
    Ok(CvResult {
        kind,
        mean: mean(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>()),
        std: std_dev(&repeat_means),
        repeat_means,
        folds,
    })
}
