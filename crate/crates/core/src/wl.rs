//! Weisfeiler-Lehman color refinement with one label dictionary per iteration
//! shared by every graph of a dataset.
//!
//! At iteration `h` each node's new label is the compressed id of the pair
//! `(label at h-1, sorted neighbor labels at h-1)`. Ids are handed out in
//! first-encounter order while walking graphs and then nodes in index order, so
//! a refinement is a pure function of the input sequence. Iteration 0 holds the
//! original node labels and is kept apart: the dictionaries cover iterations
//! `1..=H` only.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ClassLabel, Graph, GraphDataset};

/// `(parent label, sorted neighbor labels)` at the previous iteration.
pub type Signature = (u32, Vec<u32>);

/// Dictionary for one iteration: signature <-> contiguous id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    ids: HashMap<Signature, u32>,
    signatures: Vec<Signature>,
}

impl Alphabet {
    fn intern(&mut self, sig: Signature) -> u32 {
        if let Some(&id) = self.ids.get(&sig) {
            return id;
        }
        let id = self.signatures.len() as u32;
        self.signatures.push(sig.clone());
        self.ids.insert(sig, id);
        id
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn signature(&self, id: u32) -> Option<&Signature> {
        self.signatures.get(id as usize)
    }

    pub fn id(&self, sig: &Signature) -> Option<u32> {
        self.ids.get(sig).copied()
    }
}

/// Renders a signature as `(parent,[n1,n2,...])`.
pub fn signature_key(sig: &Signature) -> String {
    let nbrs: Vec<String> = sig.1.iter().map(u32::to_string).collect();
    format!("({},[{}])", sig.0, nbrs.join(","))
}

fn parse_signature_key(key: &str) -> Option<Signature> {
    let inner = key.strip_prefix('(')?.strip_suffix("])")?;
    let (parent, rest) = inner.split_once(",[")?;
    let parent = parent.parse().ok()?;
    let nbrs = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',').map(|s| s.parse().ok()).collect::<Option<Vec<u32>>>()?
    };
    Some((parent, nbrs))
}

/// Walks two label-sorted sparse lists and yields `(label, a, b)` for labels
/// present in both.
pub(crate) fn common_labels<'a, A: Copy, B: Copy>(
    a: &'a [(u32, A)],
    b: &'a [(u32, B)],
) -> impl Iterator<Item = (u32, A, B)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || {
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let out = (a[i].0, a[i].1, b[j].1);
                    i += 1;
                    j += 1;
                    return Some(out);
                }
            }
        }
        None
    })
}

/// Per-iteration label counts of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelHistogram {
    n_nodes: usize,
    /// `levels[h - 1]` lists `(label, count)` sorted by label.
    levels: Vec<Vec<(u32, u32)>>,
}

impl LabelHistogram {
    fn from_labels(n_nodes: usize, labels: &[Vec<u32>]) -> Self {
        let levels = labels
            .iter()
            .map(|col| {
                let mut sorted = col.clone();
                sorted.sort_unstable();
                let mut out: Vec<(u32, u32)> = Vec::new();
                for l in sorted {
                    match out.last_mut() {
                        Some((last, c)) if *last == l => *c += 1,
                        _ => out.push((l, 1)),
                    }
                }
                out
            })
            .collect();
        LabelHistogram { n_nodes, levels }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn iterations(&self) -> usize {
        self.levels.len()
    }

    /// `(label, count)` pairs at iteration `h` (1-based), sorted by label.
    pub fn counts(&self, h: usize) -> &[(u32, u32)] {
        &self.levels[h - 1]
    }

    /// `(label, count / n_V)` pairs at iteration `h` (1-based).
    pub fn masses(&self, h: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let n = self.n_nodes as f64;
        self.levels[h - 1].iter().map(move |&(l, c)| (l, c as f64 / n))
    }

    pub fn mass(&self, h: usize, label: u32) -> f64 {
        let level = &self.levels[h - 1];
        level
            .binary_search_by_key(&label, |x| x.0)
            .map_or(0.0, |i| level[i].1 as f64 / self.n_nodes as f64)
    }

    /// Sparse mass map at iteration `h`, as used by the transport routines.
    pub fn mass_map(&self, h: usize) -> Vec<(u32, f64)> {
        self.masses(h).collect()
    }
}

/// WL labels of a set of graphs under shared per-iteration dictionaries.
#[derive(Debug, Clone, PartialEq)]
pub struct WlRefinement {
    alphabets: Vec<Alphabet>,
    graphs: Vec<EmbeddedGraph>,
}

#[derive(Debug, Clone, PartialEq)]
struct EmbeddedGraph {
    graph_id: usize,
    class_label: ClassLabel,
    initial: Vec<u32>,
    /// `labels[h - 1][v]`
    labels: Vec<Vec<u32>>,
    histogram: LabelHistogram,
}

impl WlRefinement {
    /// Refines every graph of `ds` for `iterations` rounds.
    pub fn refine(ds: &GraphDataset, iterations: usize) -> Result<Self> {
        Self::refine_graphs(ds.graphs(), iterations)
    }

    pub fn refine_graphs(graphs: &[Graph], iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidArgument("WL iteration count must be >= 1".into()));
        }
        let mut r = WlRefinement {
            alphabets: vec![Alphabet::default(); iterations],
            graphs: Vec::with_capacity(graphs.len()),
        };
        r.extend(graphs);
        Ok(r)
    }

    /// Embeds further graphs against the existing dictionaries. Signatures not
    /// seen before receive fresh ids appended to the relevant alphabet.
    pub fn extend(&mut self, graphs: &[Graph]) {
        let iterations = self.alphabets.len();
        let mut current: Vec<Vec<u32>> = graphs.iter().map(|g| g.node_labels().to_vec()).collect();
        let mut per_graph: Vec<Vec<Vec<u32>>> = vec![Vec::with_capacity(iterations); graphs.len()];
        for alphabet in self.alphabets.iter_mut() {
            for (gi, g) in graphs.iter().enumerate() {
                let prev = &current[gi];
                let next: Vec<u32> = (0..g.num_nodes())
                    .map(|v| {
                        let mut nbrs: Vec<u32> =
                            g.neighbors(v).iter().map(|&u| prev[u as usize]).collect();
                        nbrs.sort_unstable();
                        alphabet.intern((prev[v], nbrs))
                    })
                    .collect();
                per_graph[gi].push(next);
            }
            for (gi, labels) in per_graph.iter().enumerate() {
                current[gi] = labels.last().expect("one level per iteration").clone();
            }
        }
        for (g, labels) in graphs.iter().zip(per_graph) {
            let histogram = LabelHistogram::from_labels(g.num_nodes(), &labels);
            self.graphs.push(EmbeddedGraph {
                graph_id: g.graph_id(),
                class_label: g.class_label(),
                initial: g.node_labels().to_vec(),
                labels,
                histogram,
            });
        }
    }

    /// Copy restricted to the first `iterations` rounds.
    pub fn truncated(&self, iterations: usize) -> Result<Self> {
        if iterations == 0 || iterations > self.iterations() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate {} iterations to {iterations}",
                self.iterations()
            )));
        }
        Ok(WlRefinement {
            alphabets: self.alphabets[..iterations].to_vec(),
            graphs: self
                .graphs
                .iter()
                .map(|g| {
                    let labels = g.labels[..iterations].to_vec();
                    EmbeddedGraph {
                        graph_id: g.graph_id,
                        class_label: g.class_label,
                        initial: g.initial.clone(),
                        histogram: LabelHistogram::from_labels(g.initial.len(), &labels),
                        labels,
                    }
                })
                .collect(),
        })
    }

    pub fn iterations(&self) -> usize {
        self.alphabets.len()
    }

    pub fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    /// Dictionary of iteration `h` (1-based).
    pub fn alphabet(&self, h: usize) -> &Alphabet {
        &self.alphabets[h - 1]
    }

    /// `|Σ^h|` for every iteration.
    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.alphabets.iter().map(Alphabet::len).collect()
    }

    fn graph(&self, index: usize) -> Result<&EmbeddedGraph> {
        self.graphs.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.graphs.len(),
        })
    }

    pub fn class_label(&self, index: usize) -> Result<ClassLabel> {
        Ok(self.graph(index)?.class_label)
    }

    pub fn class_labels(&self) -> Vec<ClassLabel> {
        self.graphs.iter().map(|g| g.class_label).collect()
    }

    pub fn graph_id(&self, index: usize) -> Result<usize> {
        Ok(self.graph(index)?.graph_id)
    }

    pub fn num_nodes(&self, index: usize) -> Result<usize> {
        Ok(self.graph(index)?.initial.len())
    }

    pub fn initial_labels(&self, index: usize) -> Result<&[u32]> {
        Ok(&self.graph(index)?.initial)
    }

    /// Labels of every node at iteration `h` (1-based).
    pub fn labels_at(&self, index: usize, h: usize) -> Result<&[u32]> {
        let g = self.graph(index)?;
        g.labels
            .get(h.wrapping_sub(1))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("iteration {h} outside 1..={}", g.labels.len())))
    }

    /// Embedding of node `v`: its labels at iterations `1..=H`.
    pub fn embedding_row(&self, index: usize, v: usize) -> Result<Vec<u32>> {
        let g = self.graph(index)?;
        if v >= g.initial.len() {
            return Err(Error::IndexOutOfRange {
                index: v,
                len: g.initial.len(),
            });
        }
        Ok(g.labels.iter().map(|col| col[v]).collect())
    }

    /// All node embeddings of a graph as an `n_V x H` row list.
    pub fn embeddings(&self, index: usize) -> Result<Vec<Vec<u32>>> {
        let n = self.num_nodes(index)?;
        (0..n).map(|v| self.embedding_row(index, v)).collect()
    }

    pub fn histogram(&self, index: usize) -> Result<&LabelHistogram> {
        Ok(&self.graph(index)?.histogram)
    }

    /// Human-readable subtree-pattern key of label `id` at iteration `h`.
    pub fn pattern_key(&self, h: usize, id: u32) -> Option<String> {
        self.alphabets.get(h.wrapping_sub(1))?.signature(id).map(signature_key)
    }

    pub fn to_sidecar(&self) -> WlSidecar {
        WlSidecar {
            iterations: self.iterations(),
            alphabets: self
                .alphabets
                .iter()
                .map(|a| a.signatures.iter().map(signature_key).collect())
                .collect(),
            graph_ids: self.graphs.iter().map(|g| g.graph_id).collect(),
            class_labels: self.graphs.iter().map(|g| g.class_label).collect(),
            initial_labels: self.graphs.iter().map(|g| g.initial.clone()).collect(),
            embeddings: self.graphs.iter().map(|g| g.labels.clone()).collect(),
        }
    }

    pub fn from_sidecar(s: &WlSidecar) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(format!("malformed WL sidecar: {m}"));
        if s.iterations == 0 || s.alphabets.len() != s.iterations {
            return Err(bad("iteration count does not match alphabets".into()));
        }
        let mut alphabets = Vec::with_capacity(s.iterations);
        for keys in &s.alphabets {
            let mut a = Alphabet::default();
            for k in keys {
                let sig = parse_signature_key(k).ok_or_else(|| bad(format!("bad key {k:?}")))?;
                a.intern(sig);
            }
            if a.len() != keys.len() {
                return Err(bad("duplicate dictionary key".into()));
            }
            alphabets.push(a);
        }
        let n = s.graph_ids.len();
        if s.class_labels.len() != n || s.initial_labels.len() != n || s.embeddings.len() != n {
            return Err(bad("per-graph arrays differ in length".into()));
        }
        let mut graphs = Vec::with_capacity(n);
        for i in 0..n {
            let labels = s.embeddings[i].clone();
            let nv = s.initial_labels[i].len();
            if labels.len() != s.iterations || labels.iter().any(|c| c.len() != nv) {
                return Err(bad(format!("graph {i} embedding has the wrong shape")));
            }
            for (h, col) in labels.iter().enumerate() {
                if col.iter().any(|&l| l as usize >= alphabets[h].len()) {
                    return Err(bad(format!("graph {i} uses an unknown label at iteration {}", h + 1)));
                }
            }
            graphs.push(EmbeddedGraph {
                graph_id: s.graph_ids[i],
                class_label: s.class_labels[i],
                initial: s.initial_labels[i].clone(),
                histogram: LabelHistogram::from_labels(nv, &labels),
                labels,
            });
        }
        Ok(WlRefinement { alphabets, graphs })
    }
}

/// JSON cache of a refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlSidecar {
    pub iterations: usize,
    /// `alphabets[h - 1][id]` is the `(parent,[neighbors])` key of label `id`.
    pub alphabets: Vec<Vec<String>>,
    pub graph_ids: Vec<usize>,
    pub class_labels: Vec<ClassLabel>,
    pub initial_labels: Vec<Vec<u32>>,
    /// `embeddings[graph][h - 1][node]`
    pub embeddings: Vec<Vec<Vec<u32>>>,
}

fn check_prefix(u: &[u32], v: &[u32], h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidArgument("embedding depth h must be >= 1".into()));
    }
    if u.len() < h || v.len() < h {
        return Err(Error::InvalidArgument(format!(
            "embeddings of length {} and {} are shorter than h = {h}",
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

/// Fraction of iterations `1..=h` at which two node embeddings disagree.
pub fn hamming_distance(u: &[u32], v: &[u32], h: usize) -> Result<f64> {
    check_prefix(u, v, h)?;
    let diff = u[..h].iter().zip(&v[..h]).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / h as f64)
}

/// Fraction of iterations `1..=h` at which two node embeddings agree.
pub fn base_kernel(u: &[u32], v: &[u32], h: usize) -> Result<f64> {
    check_prefix(u, v, h)?;
    let same = u[..h].iter().zip(&v[..h]).filter(|(a, b)| a == b).count();
    Ok(same as f64 / h as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(graphs: Vec<Graph>) -> GraphDataset {
        GraphDataset::new("t", graphs).unwrap()
    }

    #[test]
    fn path_endpoints_share_a_label() {
        let g = Graph::new(0, vec![0, 1, 0], [(0, 1), (1, 2)], 1).unwrap();
        let r = WlRefinement::refine(&ds(vec![g]), 1).unwrap();
        let l = r.labels_at(0, 1).unwrap();
        assert_eq!(l[0], l[2]);
        assert_ne!(l[0], l[1]);
        assert_eq!(r.alphabet(1).len(), 2);
        assert_eq!(r.pattern_key(1, l[1]).unwrap(), "(1,[0,0])");
        assert_eq!(r.pattern_key(1, l[0]).unwrap(), "(0,[1])");
    }

    #[test]
    fn isolated_node_keeps_one_label_per_iteration() {
        let g = Graph::new(0, vec![5], [], 1).unwrap();
        let r = WlRefinement::refine(&ds(vec![g]), 2).unwrap();
        assert_eq!(r.alphabet_sizes(), vec![1, 1]);
        let h = r.histogram(0).unwrap();
        assert_eq!(h.mass_map(1), vec![(0, 1.0)]);
        assert_eq!(h.mass_map(2), vec![(0, 1.0)]);
    }

    #[test]
    fn ids_are_contiguous_and_first_encounter_ordered() {
        let a = Graph::new(0, vec![2, 0, 1], [(0, 1), (1, 2)], 1).unwrap();
        let b = Graph::new(1, vec![0, 0], [(0, 1)], -1).unwrap();
        let r = WlRefinement::refine(&ds(vec![a, b]), 3).unwrap();
        assert_eq!(r.labels_at(0, 1).unwrap(), &[0, 1, 2]);
        assert_eq!(r.labels_at(1, 1).unwrap(), &[3, 3]);
        for h in 1..=3 {
            let mut seen: Vec<u32> = (0..2)
                .flat_map(|g| r.labels_at(g, h).unwrap().to_vec())
                .collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen, (0..r.alphabet(h).len() as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn histogram_masses_from_counts() {
        // star with centre 0: leaves 1,2 carry label 0, leaf 3 label 1
        let g = Graph::new(0, vec![9, 0, 0, 1], [(0, 1), (0, 2), (0, 3)], 1).unwrap();
        let r = WlRefinement::refine(&ds(vec![g]), 1).unwrap();
        let h = r.histogram(0).unwrap();
        let mut masses: Vec<f64> = h.masses(1).map(|x| x.1).collect();
        masses.sort_by(f64::total_cmp);
        assert_eq!(masses, vec![0.25, 0.25, 0.5]);
        assert!(r.histogram(1).is_err());
    }

    #[test]
    fn hamming_and_base_kernel() {
        assert_eq!(hamming_distance(&[1, 2, 3], &[1, 2, 3], 3).unwrap(), 0.0);
        assert_eq!(hamming_distance(&[1, 2, 3], &[4, 5, 6], 3).unwrap(), 1.0);
        assert_eq!(hamming_distance(&[1, 2], &[1, 7], 2).unwrap(), 0.5);
        assert_eq!(base_kernel(&[1, 2], &[1, 2], 2).unwrap(), 1.0);
        assert_eq!(base_kernel(&[1, 2], &[3, 4], 2).unwrap(), 0.0);
        assert!(hamming_distance(&[1], &[1], 0).is_err());
        assert!(base_kernel(&[1], &[1, 2], 2).is_err());
    }

    #[test]
    fn extend_appends_unseen_patterns() {
        let a = Graph::new(0, vec![0, 1], [(0, 1)], 1).unwrap();
        let b = Graph::new(1, vec![0, 1, 1], [(0, 1), (0, 2)], -1).unwrap();
        let mut r = WlRefinement::refine_graphs(std::slice::from_ref(&a), 1).unwrap();
        assert_eq!(r.alphabet(1).len(), 2);
        r.extend(&[b]);
        assert_eq!(r.num_graphs(), 2);
        // node 0 of b has signature (0,[1,1]) which is new; leaves reuse (1,[0])
        assert_eq!(r.alphabet(1).len(), 3);
        assert_eq!(r.labels_at(1, 1).unwrap(), &[2, 1, 1]);
    }

    #[test]
    fn sidecar_round_trip() {
        let a = Graph::new(3, vec![0, 1, 0], [(0, 1), (1, 2)], 1).unwrap();
        let b = Graph::new(7, vec![1, 1], [(0, 1)], -1).unwrap();
        let r = WlRefinement::refine(&ds(vec![a, b]), 2).unwrap();
        let json = serde_json::to_string(&r.to_sidecar()).unwrap();
        let back = WlRefinement::from_sidecar(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn truncation_keeps_prefix() {
        let a = Graph::new(0, vec![0, 1, 0, 2], [(0, 1), (1, 2), (2, 3)], 1).unwrap();
        let r = WlRefinement::refine(&ds(vec![a]), 3).unwrap();
        let t = r.truncated(2).unwrap();
        assert_eq!(t.iterations(), 2);
        assert_eq!(t.labels_at(0, 2).unwrap(), r.labels_at(0, 2).unwrap());
        assert!(r.truncated(4).is_err());
    }
}
