//! Node-labeled undirected graphs and labeled graph collections.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label, stored as `-1` or `+1`.
pub type ClassLabel = i8;

/// Undirected, node-labeled graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    graph_id: usize,
    node_labels: Vec<u32>,
    /// Each edge stored once as `(u, v)` with `u < v`, sorted.
    edges: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
    class_label: ClassLabel,
}

impl Graph {
    /// Builds a graph, validating indices. Edges may be given in either
    /// orientation; a repeated pair is an error.
    pub fn new(
        graph_id: usize,
        node_labels: Vec<u32>,
        edges: impl IntoIterator<Item = (u32, u32)>,
        class_label: ClassLabel,
    ) -> Result<Self> {
        if node_labels.is_empty() {
            return Err(Error::InvalidGraph(format!("graph {graph_id} has no nodes")));
        }
        if class_label != 1 && class_label != -1 {
            return Err(Error::InvalidGraph(format!(
                "graph {graph_id} has class label {class_label}, expected -1 or +1"
            )));
        }
        let n = node_labels.len() as u32;
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "graph {graph_id}: edge ({u}, {v}) references a node >= {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("graph {graph_id}: self-loop on node {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "graph {graph_id}: duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut g = Graph {
            graph_id,
            node_labels,
            edges,
            neighbors: Vec::new(),
            class_label,
        };
        g.rebuild_neighbors();
        Ok(g)
    }

    fn rebuild_neighbors(&mut self) {
        let mut neighbors = vec![Vec::new(); self.node_labels.len()];
        for &(u, v) in &self.edges {
            neighbors[u as usize].push(v);
            neighbors[v as usize].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        self.neighbors = neighbors;
    }

    pub fn graph_id(&self) -> usize {
        self.graph_id
    }

    pub fn class_label(&self) -> ClassLabel {
        self.class_label
    }

    pub fn node_labels(&self) -> &[u32] {
        &self.node_labels
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&(v as u32)).is_ok()
    }

    /// Same graph with node `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.num_nodes();
        if perm.len() != n || perm.iter().collect::<BTreeSet<_>>().len() != n || perm.iter().any(|&p| p >= n) {
            return Err(Error::InvalidArgument("not a permutation of the node set".into()));
        }
        let mut labels = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            labels[p] = self.node_labels[i];
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u as usize] as u32, perm[v as usize] as u32));
        Graph::new(self.graph_id, labels, edges, self.class_label)
    }

    pub fn with_class_label(mut self, class_label: ClassLabel) -> Self {
        self.class_label = class_label;
        self
    }

    pub fn with_graph_id(mut self, graph_id: usize) -> Self {
        self.graph_id = graph_id;
        self
    }
}

/// Labeled graph collection sharing one initial node-label alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDataset {
    name: String,
    graphs: Vec<Graph>,
    label_alphabet: Vec<u32>,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        let classes: BTreeSet<_> = graphs.iter().map(Graph::class_label).collect();
        if classes.len() > 2 {
            return Err(Error::InvalidDataset(format!("more than two classes: {classes:?}")));
        }
        let label_alphabet: Vec<u32> = graphs
            .iter()
            .flat_map(|g| g.node_labels().iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(GraphDataset {
            name: name.into(),
            graphs,
            label_alphabet,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&Graph> {
        self.graphs.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.graphs.len(),
        })
    }

    /// Distinct initial node labels, ascending.
    pub fn label_alphabet(&self) -> &[u32] {
        &self.label_alphabet
    }

    pub fn label_alphabet_size(&self) -> usize {
        self.label_alphabet.len()
    }

    pub fn class_labels(&self) -> Vec<ClassLabel> {
        self.graphs.iter().map(Graph::class_label).collect()
    }

    /// Dataset restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<GraphDataset> {
        let graphs = indices
            .iter()
            .map(|&i| self.get(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        GraphDataset::new(self.name.clone(), graphs)
    }

    pub fn stats(&self) -> Result<DatasetStats> {
        compute_stats(self)
    }
}

/// Summary counts in the layout of the usual benchmark statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_graphs: usize,
    /// Graph count per class label.
    pub class_counts: BTreeMap<ClassLabel, usize>,
    pub avg_nodes: f64,
    /// Mean number of ordered adjacency pairs, i.e. twice the undirected edge count.
    pub avg_directed_edges: f64,
    pub n_node_labels: usize,
}

pub fn compute_stats(ds: &GraphDataset) -> Result<DatasetStats> {
    if ds.is_empty() {
        return Err(Error::InvalidDataset("cannot summarize an empty dataset".into()));
    }
    let n = ds.len() as f64;
    let mut class_counts = BTreeMap::new();
    for g in ds.graphs() {
        *class_counts.entry(g.class_label()).or_insert(0) += 1;
    }
    let nodes: usize = ds.graphs().iter().map(Graph::num_nodes).sum();
    let edges: usize = ds.graphs().iter().map(Graph::num_edges).sum();
    Ok(DatasetStats {
        n_graphs: ds.len(),
        class_counts,
        avg_nodes: nodes as f64 / n,
        avg_directed_edges: 2.0 * edges as f64 / n,
        n_node_labels: ds.label_alphabet_size(),
    })
}
