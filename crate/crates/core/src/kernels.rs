//! Graph kernels over WL label distributions.
//!
//! All kernels here reduce to sparse operations on the per-iteration label
//! histograms:
//!
//! * WL subtree: `(1/H) sum_h <count_h(G), count_h(G')>`
//! * WL optimal assignment: `(1/H) sum_h sum_v min(count_h(G)(v), count_h(G')(v))`
//! * WWL: `exp(-gamma * D)` with `D = 1 - (1/H) sum_h sum_v min(mu_h(G)(v), mu_h(G')(v))`
//! * weighted WWL: `exp(-gamma * d_W)` with `d_W = b - <W, Z(G, G')>`, where
//!   `Z` collects the per-label shared masses divided by `H`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::ClassLabel;
use crate::transport::wwl_distance;
use crate::wl::{common_labels, WlRefinement};

/// Sparse vector laid out in per-iteration blocks; entries are label-sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseBlocks {
    blocks: Vec<Vec<(u32, f64)>>,
}

/// Shared-mass feature `Z(G, G')` of a graph pair.
pub type PairFeature = SparseBlocks;

impl SparseBlocks {
    pub fn zeros(iterations: usize) -> Self {
        SparseBlocks {
            blocks: vec![Vec::new(); iterations],
        }
    }

    /// Builds from per-block entries; each block is sorted and must not repeat a label.
    pub fn from_blocks(mut blocks: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        for b in &mut blocks {
            b.sort_by_key(|x| x.0);
            if b.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidArgument("sparse block repeats a label".into()));
            }
        }
        Ok(SparseBlocks { blocks })
    }

    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    /// Entries of iteration `h` (1-based).
    pub fn block(&self, h: usize) -> &[(u32, f64)] {
        &self.blocks[h - 1]
    }

    pub fn blocks(&self) -> &[Vec<(u32, f64)>] {
        &self.blocks
    }

    /// `(h, label, value)` over all stored entries, `h` 1-based.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u32, f64)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(h, b)| b.iter().map(move |&(l, x)| (h + 1, l, x)))
    }

    pub fn support_len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.support_len() == 0
    }

    pub fn sum(&self) -> f64 {
        self.entries().map(|e| e.2).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.entries().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SparseBlocks {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|&(l, x)| (l, x * factor)).collect())
                .collect(),
        }
    }

    /// Adds `factor * self` into a dense accumulator shaped like a [`WeightVector`].
    pub fn add_to_dense(&self, factor: f64, dense: &mut [Vec<f64>]) {
        for (b, d) in self.blocks.iter().zip(dense.iter_mut()) {
            for &(l, x) in b {
                d[l as usize] += factor * x;
            }
        }
    }
}

/// `Z(G, G')`: per-iteration shared masses `min(mu(v), mu'(v))`, divided by `H`.
pub fn pair_feature(r: &WlRefinement, g1: usize, g2: usize) -> Result<PairFeature> {
    let a = r.histogram(g1)?;
    let b = r.histogram(g2)?;
    let h_max = r.iterations();
    let (na, nb) = (a.n_nodes() as f64, b.n_nodes() as f64);
    let scale = 1.0 / h_max as f64;
    let blocks = (1..=h_max)
        .map(|h| {
            common_labels(a.counts(h), b.counts(h))
                .map(|(l, ca, cb)| (l, (ca as f64 / na).min(cb as f64 / nb) * scale))
                .collect()
        })
        .collect();
    Ok(SparseBlocks { blocks })
}

/// Learnable per-label weights `W = [w_1; ...; w_H]`, their feasible set
/// `{ ||w_h - c_h||_2 <= eps_h }` and the distance offset `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    blocks: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    radii: Vec<f64>,
    offset: f64,
}

impl WeightVector {
    pub fn new(blocks: Vec<Vec<f64>>, centers: Vec<Vec<f64>>, radii: Vec<f64>, offset: f64) -> Result<Self> {
        if blocks.len() != centers.len() || blocks.len() != radii.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} weight blocks, {} centers, {} radii",
                blocks.len(),
                centers.len(),
                radii.len()
            )));
        }
        for (h, (w, c)) in blocks.iter().zip(&centers).enumerate() {
            if w.len() != c.len() {
                return Err(Error::AlphabetMismatch(format!(
                    "block {} has {} weights but {} center entries",
                    h + 1,
                    w.len(),
                    c.len()
                )));
            }
            let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
            if !(radii[h] >= 0.0) || (!c.is_empty() && radii[h] > c_min) {
                return Err(Error::InvalidArgument(format!(
                    "radius {} of block {} must lie in [0, min center = {c_min}] to keep weights nonnegative",
                    radii[h],
                    h + 1
                )));
            }
        }
        if !offset.is_finite() {
            return Err(Error::InvalidArgument("offset b must be finite".into()));
        }
        Ok(WeightVector {
            blocks,
            centers,
            radii,
            offset,
        })
    }

    /// `W = 1`, centers `1`, radii `eps_h`, offset `b = 1 + max_h eps_h`.
    pub fn ones(alphabet_sizes: &[usize], radii: Vec<f64>) -> Result<Self> {
        let offset = 1.0 + radii.iter().copied().fold(0.0, f64::max);
        let ones: Vec<Vec<f64>> = alphabet_sizes.iter().map(|&n| vec![1.0; n]).collect();
        Self::new(ones.clone(), ones, radii, offset)
    }

    /// Unit weights with `b = 1`, under which the weighted distance is the WWL distance.
    pub fn unweighted(alphabet_sizes: &[usize]) -> Self {
        let mut w = Self::ones(alphabet_sizes, vec![0.0; alphabet_sizes.len()]).expect("zero radii are valid");
        w.offset = 1.0;
        w
    }

    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// Weights of iteration `h` (1-based).
    pub fn block(&self, h: usize) -> &[f64] {
        &self.blocks[h - 1]
    }

    pub fn weight(&self, h: usize, label: u32) -> Option<f64> {
        self.blocks.get(h.wrapping_sub(1))?.get(label as usize).copied()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.blocks
    }

    /// Grows each block to `sizes[h]`; new labels get weight and center 1.
    pub fn extend_to(&mut self, sizes: &[usize]) -> Result<()> {
        if sizes.len() != self.blocks.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} iterations requested for a {}-block weight vector",
                sizes.len(),
                self.blocks.len()
            )));
        }
        for ((w, c), &n) in self.blocks.iter_mut().zip(&mut self.centers).zip(sizes) {
            if n < w.len() {
                return Err(Error::AlphabetMismatch("cannot shrink a weight block".into()));
            }
            w.resize(n, 1.0);
            c.resize(n, 1.0);
        }
        Ok(())
    }

    /// `||w_h - c_h||_2` for each block.
    pub fn deviations(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .zip(&self.centers)
            .map(|(w, c)| w.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.deviations().iter().zip(&self.radii).all(|(d, r)| *d <= r + tol)
    }

    /// `<W, Z>`; fails if `Z` references a label or iteration outside `W`.
    pub fn dot(&self, z: &SparseBlocks) -> Result<f64> {
        if z.iterations() != self.blocks.len() {
            return Err(Error::AlphabetMismatch(format!(
                "feature has {} iterations, weights have {}",
                z.iterations(),
                self.blocks.len()
            )));
        }
        let mut total = 0.0;
        for (h, (zb, wb)) in z.blocks.iter().zip(&self.blocks).enumerate() {
            for &(l, x) in zb {
                let w = wb.get(l as usize).ok_or_else(|| {
                    Error::AlphabetMismatch(format!("label {l} at iteration {} has no weight", h + 1))
                })?;
                total += w * x;
            }
        }
        Ok(total)
    }

    /// SHA-256 over the weights, centers, radii and offset.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [&self.blocks, &self.centers] {
            for b in part {
                hasher.update((b.len() as u64).to_le_bytes());
                for x in b {
                    hasher.update(x.to_le_bytes());
                }
            }
        }
        for x in self.radii.iter().chain(std::iter::once(&self.offset)) {
            hasher.update(x.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// `d_W(G, G') = b - <W, Z(G, G')>`.
pub fn weighted_distance(w: &WeightVector, z: &PairFeature) -> Result<f64> {
    Ok(w.offset - w.dot(z)?)
}

/// WL subtree kernel: the number of shared WL labels, averaged over iterations.
pub fn wl_subtree_kernel(r: &WlRefinement, g1: usize, g2: usize) -> Result<f64> {
    let a = r.histogram(g1)?;
    let b = r.histogram(g2)?;
    let h_max = r.iterations();
    let total: f64 = (1..=h_max)
        .map(|h| {
            common_labels(a.counts(h), b.counts(h))
                .map(|(_, x, y)| x as f64 * y as f64)
                .sum::<f64>()
        })
        .sum();
    Ok(total / h_max as f64)
}

/// WL optimal-assignment kernel via histogram intersection of label counts.
pub fn wl_oa_kernel(r: &WlRefinement, g1: usize, g2: usize) -> Result<f64> {
    let a = r.histogram(g1)?;
    let b = r.histogram(g2)?;
    let h_max = r.iterations();
    let total: u64 = (1..=h_max)
        .map(|h| {
            common_labels(a.counts(h), b.counts(h))
                .map(|(_, x, y)| x.min(y) as u64)
                .sum::<u64>()
        })
        .sum();
    Ok(total as f64 / h_max as f64)
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: r.len() });
        }
        Ok(SquareMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Symmetric matrix from an entry function evaluated on the upper triangle.
    pub fn symmetric_from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| f(i, j)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let mut m = SquareMatrix::zeros(n);
        for (i, row) in upper.into_iter().enumerate() {
            for (k, x) in row.into_iter().enumerate() {
                let j = i + k;
                m.data[i * n + j] = x;
                m.data[j * n + i] = x;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `idx` (rows and columns in that order).
    pub fn select(&self, idx: &[usize]) -> Self {
        let data = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        SquareMatrix { n: idx.len(), data }
    }

    /// Rectangular block `rows x cols`, returned row by row.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = DMatrix::from_row_slice(self.n, self.n, &self.data);
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn add_to_diagonal(&mut self, x: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += x;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// WL subtree kernel.
    #[serde(rename = "wl")]
    WlSubtree,
    /// WL optimal-assignment kernel.
    #[serde(rename = "wloa")]
    WlOa,
    /// Laplacian kernel of the WWL distance.
    Wwl,
    /// Laplacian kernel of the learned weighted distance.
    Weighted,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::WlSubtree => "wl",
            KernelKind::WlOa => "wloa",
            KernelKind::Wwl => "wwl",
            KernelKind::Weighted => "weighted",
        }
    }

    pub fn uses_gamma(self) -> bool {
        matches!(self, KernelKind::Wwl | KernelKind::Weighted)
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wl" => Ok(KernelKind::WlSubtree),
            "wloa" => Ok(KernelKind::WlOa),
            "wwl" => Ok(KernelKind::Wwl),
            "weighted" => Ok(KernelKind::Weighted),
            other => Err(Error::InvalidArgument(format!("unknown kernel kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub kind: Option<KernelKind>,
    pub iterations: Option<usize>,
    pub gamma: Option<f64>,
    pub weights_fingerprint: Option<String>,
}

/// Symmetric Gram matrix with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub matrix: SquareMatrix,
    pub meta: KernelMeta,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// Dense CSV, one matrix row per line, 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            let line: Vec<String> = self.matrix.row(i).iter().map(|&x| format_g12(x)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// LIBSVM precomputed-kernel rows: `label 0:serial 1:K_i1 ... n:K_in`.
    pub fn write_libsvm<W: Write>(&self, labels: &[ClassLabel], mut out: W) -> Result<()> {
        if labels.len() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for a {}x{} kernel",
                labels.len(),
                self.n(),
                self.n()
            )));
        }
        for (i, &y) in labels.iter().enumerate() {
            let mut line = format!("{:+} 0:{}", y, i + 1);
            for (j, &x) in self.matrix.row(i).iter().enumerate() {
                write!(line, " {}:{}", j + 1, format_g12(x)).expect("writing to a String");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Reads a dense CSV matrix written by [`KernelMatrix::write_csv`].
pub fn read_csv_matrix<R: BufRead>(input: R) -> Result<SquareMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: "<csv>".into(),
                    line: ln + 1,
                    msg: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SquareMatrix::from_rows(rows)
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Entrywise `exp(-gamma * D)`.
pub fn laplacian_kernel(d: &SquareMatrix, gamma: f64) -> Result<KernelMatrix> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let asym = d.asymmetry();
    if asym > 1e-9 {
        return Err(Error::NotSymmetric(asym));
    }
    if d.data.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument("distances must be finite and nonnegative".into()));
    }
    Ok(KernelMatrix {
        matrix: d.map(|x| (-gamma * x).exp()),
        meta: KernelMeta {
            kind: None,
            iterations: None,
            gamma: Some(gamma),
            weights_fingerprint: None,
        },
    })
}

/// Pairwise WWL distances of every graph in `r`.
pub fn wwl_distance_matrix(r: &WlRefinement) -> Result<SquareMatrix> {
    SquareMatrix::symmetric_from_fn(r.num_graphs(), |i, j| {
        if i == j {
            Ok(0.0)
        } else {
            wwl_distance(r, i, j)
        }
    })
}

/// Pairwise weighted distances `d_W` of every graph in `r`.
pub fn weighted_distance_matrix(r: &WlRefinement, w: &WeightVector) -> Result<SquareMatrix> {
    SquareMatrix::symmetric_from_fn(r.num_graphs(), |i, j| weighted_distance(w, &pair_feature(r, i, j)?))
}

/// Full Gram matrix of one kernel over every graph of the refinement.
pub fn gram_matrix(kind: KernelKind, r: &WlRefinement, weights: Option<&WeightVector>, gamma: f64) -> Result<KernelMatrix> {
    let n = r.num_graphs();
    let (matrix, fingerprint) = match kind {
        KernelKind::WlSubtree => (SquareMatrix::symmetric_from_fn(n, |i, j| wl_subtree_kernel(r, i, j))?, None),
        KernelKind::WlOa => (SquareMatrix::symmetric_from_fn(n, |i, j| wl_oa_kernel(r, i, j))?, None),
        KernelKind::Wwl => (laplacian_kernel(&wwl_distance_matrix(r)?, gamma)?.matrix, None),
        KernelKind::Weighted => {
            let w = weights.ok_or_else(|| Error::InvalidArgument("weighted kernel needs a weight vector".into()))?;
            if w.iterations() != r.iterations() {
                return Err(Error::AlphabetMismatch(format!(
                    "weights cover {} iterations, refinement has {}",
                    w.iterations(),
                    r.iterations()
                )));
            }
            let d = weighted_distance_matrix(r, w)?;
            (laplacian_kernel(&d, gamma)?.matrix, Some(w.fingerprint()))
        }
    };
    Ok(KernelMatrix {
        matrix,
        meta: KernelMeta {
            kind: Some(kind),
            iterations: Some(r.iterations()),
            gamma: kind.uses_gamma().then_some(gamma),
            weights_fingerprint: fingerprint,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub is_psd: bool,
}

/// Smallest eigenvalue of `K`; passes iff it is at least `-tol`.
pub fn psd_check(k: &SquareMatrix, tol: f64) -> PsdReport {
    let min_eigenvalue = k.min_eigenvalue();
    PsdReport {
        min_eigenvalue,
        is_psd: min_eigenvalue >= -tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, GraphDataset};

    fn refinement(graphs: Vec<Graph>, h: usize) -> WlRefinement {
        WlRefinement::refine(&GraphDataset::new("t", graphs).unwrap(), h).unwrap()
    }

    #[test]
    fn hand_computed_weighted_distance() {
        let z = SparseBlocks::from_blocks(vec![vec![(0, 0.5), (1, 0.25)]]).unwrap();
        let w = WeightVector::new(vec![vec![2.0, 1.0]], vec![vec![2.0, 1.0]], vec![0.0], 2.0).unwrap();
        assert!((weighted_distance(&w, &z).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(weighted_distance(&w, &SparseBlocks::zeros(1)).unwrap(), 2.0);
    }

    #[test]
    fn weight_vector_rejects_bad_shapes() {
        assert!(WeightVector::ones(&[2, 3], vec![0.5]).is_err());
        assert!(WeightVector::ones(&[2], vec![1.5]).is_err());
        let w = WeightVector::ones(&[2], vec![0.5]).unwrap();
        let z = SparseBlocks::from_blocks(vec![vec![(5, 0.1)]]).unwrap();
        assert!(matches!(w.dot(&z), Err(Error::AlphabetMismatch(_))));
        assert!(matches!(w.dot(&SparseBlocks::zeros(2)), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn default_offset_covers_the_radius() {
        let w = WeightVector::ones(&[3, 4], vec![0.1, 0.5]).unwrap();
        assert_eq!(w.offset(), 1.5);
        assert!(w.is_feasible(0.0));
    }

    #[test]
    fn single_node_kernels() {
        let r = refinement(
            vec![
                Graph::new(0, vec![4], [], 1).unwrap(),
                Graph::new(1, vec![4], [], 1).unwrap(),
                Graph::new(2, vec![5], [], -1).unwrap(),
            ],
            2,
        );
        assert_eq!(wl_subtree_kernel(&r, 0, 1).unwrap(), 1.0);
        assert_eq!(wl_subtree_kernel(&r, 0, 2).unwrap(), 0.0);
        assert_eq!(wl_oa_kernel(&r, 0, 2).unwrap(), 0.0);
        assert!(pair_feature(&r, 0, 2).unwrap().is_empty());
    }

    #[test]
    fn identical_graphs() {
        let g = Graph::new(0, vec![0, 1, 0, 2], [(0, 1), (1, 2), (2, 3)], 1).unwrap();
        let r = refinement(vec![g.clone(), g.with_graph_id(1)], 3);
        assert_eq!(wl_oa_kernel(&r, 0, 1).unwrap(), 4.0);
        let z = pair_feature(&r, 0, 1).unwrap();
        for h in 1..=3 {
            let s: f64 = z.block(h).iter().map(|x| x.1).sum();
            assert!((s - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((z.sum() - 1.0).abs() < 1e-12);
        let k = gram_matrix(KernelKind::Wwl, &r, None, 0.3).unwrap();
        assert_eq!(k.matrix.rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn laplacian_values() {
        let d = SquareMatrix::from_rows(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let k = laplacian_kernel(&d, 0.01).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert!((k.get(0, 1) - 0.995012479192682).abs() < 1e-12);
        assert!(laplacian_kernel(&d, 0.0).is_err());
        let bad = SquareMatrix::from_rows(vec![vec![0.0, 0.5], vec![0.4, 0.0]]).unwrap();
        assert!(matches!(laplacian_kernel(&bad, 1.0), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn psd_examples() {
        let id = SquareMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = psd_check(&id, 1e-8);
        assert!(r.is_psd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);
        let bad = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = psd_check(&bad, 1e-8);
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_kind_requires_weights() {
        let r = refinement(vec![Graph::new(0, vec![0], [], 1).unwrap()], 1);
        assert!(gram_matrix(KernelKind::Weighted, &r, None, 1.0).is_err());
    }

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(0.995012479192682), "0.995012479193");
        assert_eq!(format_g12(123456.0), "123456");
        assert_eq!(format_g12(1.5e-7), "1.5e-07");
        assert_eq!(format_g12(-2.25), "-2.25");
        assert_eq!(format_g12(1e15), "1e+15");
        assert_eq!(format_g12(0.0001), "0.0001");
    }

    #[test]
    fn csv_and_libsvm_export() {
        let k = KernelMatrix {
            matrix: SquareMatrix::from_rows(vec![vec![1.0, 0.25], vec![0.25, 1.0]]).unwrap(),
            meta: KernelMeta {
                kind: Some(KernelKind::Wwl),
                iterations: Some(1),
                gamma: Some(1.0),
                weights_fingerprint: None,
            },
        };
        let mut csv = Vec::new();
        k.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv.clone()).unwrap(), "1,0.25\n0.25,1\n");
        assert_eq!(read_csv_matrix(&csv[..]).unwrap(), k.matrix);
        let mut svm = Vec::new();
        k.write_libsvm(&[1, -1], &mut svm).unwrap();
        assert_eq!(String::from_utf8(svm).unwrap(), "+1 0:1 1:1 2:0.25\n-1 0:2 1:0.25 2:1\n");
    }
}
