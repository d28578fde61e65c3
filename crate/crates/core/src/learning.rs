//! Learning subtree-pattern weights for the weighted Wasserstein distance.
//!
//! Pairs with different class labels are pushed beyond `alpha1` by the smooth
//! hinge `V1`, pairs sharing a label are pulled inside `alpha2` by `V2`:
//!
//! ```text
//! V1(d) = 0                        d >= a1
//!         a1 - s/2 - d             d <= a1 - s
//!         (d - a1)^2 / (2 s)       otherwise
//!
//! V2(d) = 0                        d <= a2
//!         d - a2 - s/2             d >= a2 + s
//!         (d - a2)^2 / (2 s)       otherwise
//! ```
//!
//! With `d = b - <W, Z>` the gradient with respect to `W` is `-V'(d) Z`.
//! Both the stochastic solver and the full-batch variant project onto
//! `{ ||w_h - c_h|| <= eps_h }` after each step.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{pair_feature, weighted_distance, PairFeature, SparseBlocks, WeightVector};
use crate::wl::WlRefinement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha1: 1.0,
            alpha2: 0.5,
            sigma: 0.1,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let LossConfig { alpha1, alpha2, sigma } = *self;
        if !(alpha2 > 0.0 && alpha1 >= alpha2 && sigma > 0.0 && alpha1 - sigma >= 0.0) || !alpha1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "loss config needs alpha1 >= alpha2 > 0, sigma > 0, alpha1 >= sigma; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which loss a sampled pair is charged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRouting {
    /// `V1` for pairs with different labels, `V2` for pairs sharing one.
    #[default]
    ByObjective,
    /// The transposed assignment: `V1` for pairs sharing a label.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub mu: f64,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub routing: BranchRouting,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            mu: 1e-4,
            iterations: 500,
            seed: 0,
            routing: BranchRouting::ByObjective,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) || self.iterations == 0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and T >= 1; got mu = {}, T = {}",
                self.mu, self.iterations
            )));
        }
        Ok(())
    }
}

/// Ball radius per iteration and the distance offset `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintConfig {
    pub radii: Vec<f64>,
    /// Defaults to `1 + max eps_h`.
    pub offset: Option<f64>,
}

impl ConstraintConfig {
    pub fn uniform(eps: f64, iterations: usize) -> Self {
        ConstraintConfig {
            radii: vec![eps; iterations],
            offset: None,
        }
    }

    /// `W = 1` over the refinement's alphabets with these constraints.
    pub fn initial_weights(&self, r: &WlRefinement) -> Result<WeightVector> {
        let w = WeightVector::ones(&r.alphabet_sizes(), self.radii.clone())?;
        Ok(match self.offset {
            Some(b) => w.with_offset(b),
            None => w,
        })
    }
}

/// The two smooth hinges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    V1,
    V2,
}

impl Loss {
    pub fn value(self, d: f64, cfg: &LossConfig) -> f64 {
        let s = cfg.sigma;
        match self {
            Loss::V1 => {
                let a = cfg.alpha1;
                if d >= a {
                    0.0
                } else if d <= a - s {
                    a - s / 2.0 - d
                } else {
                    (d - a) * (d - a) / (2.0 * s)
                }
            }
            Loss::V2 => {
                let a = cfg.alpha2;
                if d <= a {
                    0.0
                } else if d >= a + s {
                    d - a - s / 2.0
                } else {
                    (d - a) * (d - a) / (2.0 * s)
                }
            }
        }
    }

    /// `dV/dd`.
    pub fn slope(self, d: f64, cfg: &LossConfig) -> f64 {
        let s = cfg.sigma;
        match self {
            Loss::V1 => {
                let a = cfg.alpha1;
                if d >= a {
                    0.0
                } else if d <= a - s {
                    -1.0
                } else {
                    (d - a) / s
                }
            }
            Loss::V2 => {
                let a = cfg.alpha2;
                if d <= a {
                    0.0
                } else if d >= a + s {
                    1.0
                } else {
                    (d - a) / s
                }
            }
        }
    }

    /// Loss charged to a pair under the given routing.
    pub fn for_pair(same_label: bool, routing: BranchRouting) -> Loss {
        match (same_label, routing) {
            (false, BranchRouting::ByObjective) | (true, BranchRouting::Literal) => Loss::V1,
            _ => Loss::V2,
        }
    }

    pub fn eval(self, w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<f64> {
        cfg.validate()?;
        Ok(self.value(weighted_distance(w, z)?, cfg))
    }

    /// Gradient with respect to `W`; its support lies inside that of `Z`.
    pub fn grad(self, w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<SparseBlocks> {
        cfg.validate()?;
        let slope = self.slope(weighted_distance(w, z)?, cfg);
        Ok(z.scaled(-slope))
    }
}

pub fn loss_v1(w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<f64> {
    Loss::V1.eval(w, z, cfg)
}

pub fn loss_v2(w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<f64> {
    Loss::V2.eval(w, z, cfg)
}

pub fn grad_v1(w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<SparseBlocks> {
    Loss::V1.grad(w, z, cfg)
}

pub fn grad_v2(w: &WeightVector, z: &PairFeature, cfg: &LossConfig) -> Result<SparseBlocks> {
    Loss::V2.grad(w, z, cfg)
}

fn project_block(w: &mut [f64], c: &[f64], eps: f64) {
    let norm = w.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if norm > eps {
        let scale = eps / norm;
        for (a, b) in w.iter_mut().zip(c) {
            *a = b + scale * (*a - b);
        }
    }
}

/// Euclidean projection onto the constraint set, block by block.
pub fn project(w: &WeightVector) -> WeightVector {
    let mut out = w.clone();
    project_in_place(&mut out);
    out
}

fn project_in_place(w: &mut WeightVector) {
    let centers = w.centers().to_vec();
    let radii = w.radii().to_vec();
    for ((block, c), eps) in w.blocks_mut().iter_mut().zip(&centers).zip(radii) {
        project_block(block, c, eps);
    }
}

/// Learned weights with the per-step loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub weights: WeightVector,
    /// Stochastic: loss of the sampled pair before its update.
    /// Batch: mean loss over all ordered pairs before each step.
    pub trace: Vec<f64>,
    /// Refinement indices whose features were read.
    pub touched: BTreeSet<usize>,
}

fn check_training_set(r: &WlRefinement, indices: &[usize]) -> Result<()> {
    if indices.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "weight learning needs at least two graphs, got {}",
            indices.len()
        )));
    }
    let mut classes = BTreeSet::new();
    for &i in indices {
        classes.insert(r.class_label(i)?);
    }
    if classes.len() < 2 {
        return Err(Error::InvalidDataset("weight learning needs both classes present".into()));
    }
    Ok(())
}

/// Projected stochastic gradient descent over randomly drawn ordered pairs of
/// distinct training graphs. `indices` selects the training graphs of `r`.
pub fn sgd_learn(
    r: &WlRefinement,
    indices: &[usize],
    loss: &LossConfig,
    sgd: &SgdConfig,
    constraint: &ConstraintConfig,
) -> Result<LearnOutcome> {
    loss.validate()?;
    sgd.validate()?;
    check_training_set(r, indices)?;
    let mut w = constraint.initial_weights(r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sgd.seed);
    let n = indices.len();
    let mut trace = Vec::with_capacity(sgd.iterations);
    let mut touched = BTreeSet::new();
    for _ in 0..sgd.iterations {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (i, j) = (indices[a], indices[b]);
        touched.insert(i);
        touched.insert(j);
        let z = pair_feature(r, i, j)?;
        let kind = Loss::for_pair(r.class_label(i)? == r.class_label(j)?, sgd.routing);
        let d = weighted_distance(&w, &z)?;
        trace.push(kind.value(d, loss));
        let slope = kind.slope(d, loss);
        if slope != 0.0 {
            // W <- W - mu * grad = W + mu * slope * Z
            for (h, l, x) in z.entries() {
                w.blocks_mut()[h - 1][l as usize] += sgd.mu * slope * x;
            }
            project_in_place(&mut w);
        }
    }
    Ok(LearnOutcome {
        weights: w,
        trace,
        touched,
    })
}

/// Pair features of every unordered training pair `(a, b)`, `a <= b`, in row-major order.
struct PairTable {
    n: usize,
    features: Vec<PairFeature>,
    same: Vec<bool>,
}

impl PairTable {
    fn build(r: &WlRefinement, indices: &[usize]) -> Result<Self> {
        let n = indices.len();
        let labels: Vec<_> = indices.iter().map(|&i| r.class_label(i)).collect::<Result<_>>()?;
        let rows: Vec<Vec<PairFeature>> = (0..n)
            .into_par_iter()
            .map(|a| (a..n).map(|b| pair_feature(r, indices[a], indices[b])).collect())
            .collect::<Result<_>>()?;
        let same = (0..n)
            .flat_map(|a| (a..n).map(move |b| (a, b)))
            .map(|(a, b)| labels[a] == labels[b])
            .collect();
        Ok(PairTable {
            n,
            features: rows.into_iter().flatten().collect(),
            same,
        })
    }

    /// Ordered-pair multiplicity of each stored pair: 1 on the diagonal, 2 off it.
    fn multiplicities(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |a| (a..self.n).map(move |b| if a == b { 1.0 } else { 2.0 }))
    }
}

/// Mean loss over all `n^2` ordered training pairs and its gradient, as dense blocks.
fn batch_objective(
    table: &PairTable,
    w: &WeightVector,
    loss: &LossConfig,
    routing: BranchRouting,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let shapes = w.alphabet_sizes();
    let chunk = 256;
    let mult: Vec<f64> = table.multiplicities().collect();
    let partials: Vec<(f64, Vec<Vec<f64>>)> = table
        .features
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, feats)| {
            let mut value = 0.0;
            let mut grad: Vec<Vec<f64>> = shapes.iter().map(|&s| vec![0.0; s]).collect();
            for (k, z) in feats.iter().enumerate() {
                let idx = c * chunk + k;
                let kind = Loss::for_pair(table.same[idx], routing);
                let d = weighted_distance(w, z)?;
                value += mult[idx] * kind.value(d, loss);
                let slope = kind.slope(d, loss);
                if slope != 0.0 {
                    z.add_to_dense(-slope * mult[idx], &mut grad);
                }
            }
            Ok((value, grad))
        })
        .collect::<Result<_>>()?;
    // fixed-order reduction keeps the result independent of thread count
    let scale = 1.0 / (table.n * table.n) as f64;
    let mut value = 0.0;
    let mut grad: Vec<Vec<f64>> = shapes.iter().map(|&s| vec![0.0; s]).collect();
    for (v, g) in partials {
        value += v;
        for (acc, part) in grad.iter_mut().zip(g) {
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
        }
    }
    for block in &mut grad {
        for x in block {
            *x *= scale;
        }
    }
    Ok((value * scale, grad))
}

/// Full-batch projected gradient descent on the mean loss over all ordered
/// training pairs, self-pairs included. Runs `sgd.iterations` steps.
pub fn batch_learn(
    r: &WlRefinement,
    indices: &[usize],
    loss: &LossConfig,
    sgd: &SgdConfig,
    constraint: &ConstraintConfig,
) -> Result<LearnOutcome> {
    loss.validate()?;
    sgd.validate()?;
    check_training_set(r, indices)?;
    let mut w = constraint.initial_weights(r)?;
    let table = PairTable::build(r, indices)?;
    let mut trace = Vec::with_capacity(sgd.iterations);
    for _ in 0..sgd.iterations {
        let (value, grad) = batch_objective(&table, &w, loss, sgd.routing)?;
        trace.push(value);
        for (block, g) in w.blocks_mut().iter_mut().zip(&grad) {
            for (x, gx) in block.iter_mut().zip(g) {
                *x -= sgd.mu * gx;
            }
        }
        project_in_place(&mut w);
    }
    Ok(LearnOutcome {
        weights: w,
        trace,
        touched: indices.iter().copied().collect(),
    })
}

/// Mean loss over all ordered pairs of `indices` and its dense gradient.
pub fn batch_gradient(
    r: &WlRefinement,
    indices: &[usize],
    w: &WeightVector,
    loss: &LossConfig,
    routing: BranchRouting,
) -> Result<(f64, Vec<Vec<f64>>)> {
    loss.validate()?;
    let table = PairTable::build(r, indices)?;
    batch_objective(&table, w, loss, routing)
}

/// Bounds on the loss, its gradient and its curvature over a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    /// `max ||Z_ij||_2`, bounding `||grad V||_2`.
    pub grad_bound: f64,
    /// `grad_bound^2 / sigma`, bounding the curvature.
    pub hess_bound: f64,
    /// `max(b - sigma/2 - alpha2, alpha1 - sigma/2)`.
    pub loss_bound: f64,
}

pub fn smoothness_constants(features: &[PairFeature], loss: &LossConfig, offset: f64) -> Result<SmoothnessConstants> {
    loss.validate()?;
    if features.is_empty() {
        return Err(Error::InvalidArgument("smoothness constants need at least one pair".into()));
    }
    let grad_bound = features.iter().map(SparseBlocks::norm2).fold(0.0, f64::max);
    Ok(SmoothnessConstants {
        grad_bound,
        hess_bound: grad_bound * grad_bound / loss.sigma,
        loss_bound: (offset - loss.sigma / 2.0 - loss.alpha2).max(loss.alpha1 - loss.sigma / 2.0),
    })
}

/// One learned weight, keyed by its readable subtree pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub h: usize,
    pub label_key: String,
    pub weight: f64,
}

/// Serialized weights with the constraint they were learned under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub radii: Vec<f64>,
    pub offset: f64,
    pub weights: Vec<WeightEntry>,
}

impl WeightsFile {
    pub fn from_weights(w: &WeightVector, r: &WlRefinement) -> Result<Self> {
        if w.alphabet_sizes() != r.alphabet_sizes() {
            return Err(Error::AlphabetMismatch("weights do not match the refinement".into()));
        }
        let mut weights = Vec::with_capacity(w.dim());
        for h in 1..=w.iterations() {
            for (id, &x) in w.block(h).iter().enumerate() {
                let label_key = r.pattern_key(h, id as u32).expect("id within alphabet");
                weights.push(WeightEntry { h, label_key, weight: x });
            }
        }
        Ok(WeightsFile {
            radii: w.radii().to_vec(),
            offset: w.offset(),
            weights,
        })
    }

    /// Weights over the alphabets of `r`; patterns absent from the file get weight 1.
    pub fn to_weights(&self, r: &WlRefinement) -> Result<WeightVector> {
        if self.radii.len() != r.iterations() {
            return Err(Error::AlphabetMismatch(format!(
                "weights cover {} iterations, refinement has {}",
                self.radii.len(),
                r.iterations()
            )));
        }
        let lookup: HashMap<(usize, &str), f64> = self
            .weights
            .iter()
            .map(|e| ((e.h, e.label_key.as_str()), e.weight))
            .collect();
        let sizes = r.alphabet_sizes();
        let blocks: Vec<Vec<f64>> = sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                (0..n as u32)
                    .map(|id| {
                        let key = r.pattern_key(k + 1, id).expect("id within alphabet");
                        lookup.get(&(k + 1, key.as_str())).copied().unwrap_or(1.0)
                    })
                    .collect()
            })
            .collect();
        let centers = sizes.iter().map(|&n| vec![1.0; n]).collect();
        WeightVector::new(blocks, centers, self.radii.clone(), self.offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, GraphDataset};

    fn cfg() -> LossConfig {
        LossConfig::default()
    }

    #[test]
    fn v1_values() {
        let c = cfg();
        assert_eq!(Loss::V1.value(1.2, &c), 0.0);
        assert!((Loss::V1.value(0.5, &c) - 0.45).abs() < 1e-15);
        assert!((Loss::V1.value(0.95, &c) - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn v2_values() {
        let c = cfg();
        assert_eq!(Loss::V2.value(0.3, &c), 0.0);
        assert!((Loss::V2.value(0.8, &c) - 0.25).abs() < 1e-15);
        assert!((Loss::V2.value(0.55, &c) - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let bad = LossConfig {
            alpha1: 0.4,
            alpha2: 0.5,
            sigma: 0.1,
        };
        assert!(bad.validate().is_err());
        assert!(SgdConfig {
            mu: 0.0,
            ..SgdConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn linear_region_gradients() {
        // b = 1, Z sums to 0.2, so d = 0.8: linear for V1 (<= 0.9) and V2 (>= 0.6)
        let z = SparseBlocks::from_blocks(vec![vec![(0, 0.15), (2, 0.05)]]).unwrap();
        let w = WeightVector::unweighted(&[3]);
        assert_eq!(grad_v1(&w, &z, &cfg()).unwrap(), z);
        assert_eq!(grad_v2(&w, &z, &cfg()).unwrap(), z.scaled(-1.0));
    }

    #[test]
    fn projection_one_dimensional() {
        let w = WeightVector::new(vec![vec![2.0]], vec![vec![1.0]], vec![0.5], 1.5).unwrap();
        assert_eq!(project(&w).block(1), &[1.5]);
        let inside = WeightVector::new(vec![vec![1.2]], vec![vec![1.0]], vec![0.5], 1.5).unwrap();
        assert_eq!(project(&inside), inside);
    }

    #[test]
    fn routing_table() {
        assert_eq!(Loss::for_pair(false, BranchRouting::ByObjective), Loss::V1);
        assert_eq!(Loss::for_pair(true, BranchRouting::ByObjective), Loss::V2);
        assert_eq!(Loss::for_pair(true, BranchRouting::Literal), Loss::V1);
    }

    #[test]
    fn smoothness_of_empty_features() {
        let s = smoothness_constants(&[SparseBlocks::zeros(2)], &cfg(), 1.5).unwrap();
        assert_eq!(s.grad_bound, 0.0);
        assert_eq!(s.hess_bound, 0.0);
        assert!((s.loss_bound - 0.95).abs() < 1e-15);
        assert!(smoothness_constants(&[], &cfg(), 1.5).is_err());
    }

    #[test]
    fn learning_rejects_degenerate_sets() {
        let g = Graph::new(0, vec![0], [], 1).unwrap();
        let ds = GraphDataset::new("t", vec![g.clone(), g.with_graph_id(1)]).unwrap();
        let r = WlRefinement::refine(&ds, 1).unwrap();
        let c = ConstraintConfig::uniform(0.5, 1);
        assert!(sgd_learn(&r, &[0, 1], &cfg(), &SgdConfig::default(), &c).is_err());
        assert!(batch_learn(&r, &[0], &cfg(), &SgdConfig::default(), &c).is_err());
    }

    #[test]
    fn weights_file_round_trip() {
        let a = Graph::new(0, vec![0, 1], [(0, 1)], 1).unwrap();
        let b = Graph::new(1, vec![1, 1], [(0, 1)], -1).unwrap();
        let r = WlRefinement::refine(&GraphDataset::new("t", vec![a, b]).unwrap(), 2).unwrap();
        let mut w = WeightVector::ones(&r.alphabet_sizes(), vec![0.5, 0.5]).unwrap();
        w.blocks_mut()[0][1] = 1.25;
        let f = WeightsFile::from_weights(&w, &r).unwrap();
        assert_eq!(f.weights[1].label_key, "(1,[0])");
        let json = serde_json::to_string(&f).unwrap();
        let back: WeightsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_weights(&r).unwrap(), w);
    }
}
