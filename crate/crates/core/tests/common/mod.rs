#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wlot_core::{Graph, GraphDataset};

/// Erdos-Renyi style graph with `1..=max_nodes` nodes over `alphabet` labels.
pub fn random_graph(rng: &mut ChaCha8Rng, id: usize, max_nodes: usize, alphabet: u32, p: f64) -> Graph {
    let n = rng.gen_range(1..=max_nodes);
    let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..alphabet)).collect();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let class = if rng.gen_bool(0.5) { 1 } else { -1 };
    Graph::new(id, labels, edges, class).unwrap()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, max_nodes: usize, alphabet: u32) -> GraphDataset {
    let graphs = (0..n).map(|i| random_graph(rng, i, max_nodes, alphabet, 0.3)).collect();
    GraphDataset::new("random", graphs).unwrap()
}

/// Label-preserving relabeling of the nodes of `g`.
pub fn shuffled(g: &Graph, rng: &mut ChaCha8Rng) -> Graph {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
    perm.shuffle(rng);
    g.permuted(&perm).unwrap()
}
