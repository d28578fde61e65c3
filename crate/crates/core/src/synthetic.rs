//! Motif-classification benchmark: eight small templates over labels
//! `{0, 1, 2}`, four of which contain the motif `1-0(-2)-0`, perturbed by
//! random extra nodes and edges.
//!
//! Templates 1, 2, 5, 6 carry the motif and class +1, templates 3, 4, 7, 8
//! lack it and carry class -1. Groups 1-4 train, groups 5-8 test.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ClassLabel, Graph, GraphDataset};
use crate::seeds::{stream_rng, streams};

const BUILTIN_TEMPLATES: &str = include_str!("../data/synthetic_templates.json");

/// Number of distinct node labels used by the templates and the noise.
pub const NUM_LABELS: u32 = 3;

/// Template graph as stored in the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub labels: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
}

impl Template {
    pub fn to_graph(&self, graph_id: usize, class_label: ClassLabel) -> Result<Graph> {
        Graph::new(graph_id, self.labels.clone(), self.edges.iter().copied(), class_label)
    }
}

/// The eight built-in templates, in group order.
pub fn builtin_templates() -> Vec<Template> {
    serde_json::from_str(BUILTIN_TEMPLATES).expect("bundled templates are valid JSON")
}

/// Class of template `index` (0-based): +1 for templates 1, 2, 5, 6.
pub fn template_class(index: usize) -> ClassLabel {
    if matches!(index % 4, 0 | 1) {
        1
    } else {
        -1
    }
}

/// Inclusive ranges for the random perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_edges: usize,
    pub max_edges: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            min_nodes: 1,
            max_nodes: 3,
            min_edges: 1,
            max_edges: 3,
        }
    }
}

impl NoiseConfig {
    fn validate(&self) -> Result<()> {
        if self.min_nodes > self.max_nodes || self.min_edges > self.max_edges {
            return Err(Error::InvalidArgument(format!("empty noise range: {self:?}")));
        }
        Ok(())
    }
}

/// True iff some node labeled 1 has two distinct neighbors labeled 0, at
/// least one of which also has a neighbor labeled 2.
pub fn contains_motif(g: &Graph) -> bool {
    let labels = g.node_labels();
    let zero_with_two = |v: u32| g.neighbors(v as usize).iter().any(|&x| labels[x as usize] == 2);
    (0..g.num_nodes()).filter(|&a| labels[a] == 1).any(|a| {
        let zeros: Vec<u32> = g
            .neighbors(a)
            .iter()
            .copied()
            .filter(|&v| labels[v as usize] == 0)
            .collect();
        zeros.len() >= 2 && zeros.iter().any(|&v| zero_with_two(v))
    })
}

/// Adds `min_nodes..=max_nodes` nodes with random labels, each attached to a
/// random existing node, then `min_edges..=max_edges` random edges between
/// nonadjacent nodes.
fn perturb(template: &Template, noise: &NoiseConfig, rng: &mut ChaCha8Rng) -> (Vec<u32>, Vec<(u32, u32)>) {
    let mut labels = template.labels.clone();
    let mut edges = template.edges.clone();
    let extra = rng.gen_range(noise.min_nodes..=noise.max_nodes);
    for _ in 0..extra {
        let v = labels.len() as u32;
        labels.push(rng.gen_range(0..NUM_LABELS));
        edges.push((rng.gen_range(0..v), v));
    }
    let n = labels.len() as u32;
    let mut free: Vec<(u32, u32)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !edges.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u)))
        .collect();
    free.shuffle(rng);
    let k = rng.gen_range(noise.min_edges..=noise.max_edges).min(free.len());
    edges.extend_from_slice(&free[..k]);
    (labels, edges)
}

/// `per_group` noisy copies of one template. Copies of motif-free templates
/// that pick up the motif by chance are redrawn.
pub fn generate_group(
    template: &Template,
    class_label: ClassLabel,
    per_group: usize,
    first_id: usize,
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Graph>> {
    noise.validate()?;
    let mut out = Vec::with_capacity(per_group);
    while out.len() < per_group {
        let (labels, edges) = perturb(template, noise, rng);
        let g = Graph::new(first_id + out.len(), labels, edges, class_label)?;
        if class_label < 0 && contains_motif(&g) {
            continue;
        }
        out.push(g);
    }
    Ok(out)
}

/// Train (groups 1-4) and test (groups 5-8) sets from the given templates.
pub fn generate_from_templates(
    templates: &[Template],
    seed: u64,
    per_group: usize,
    noise: &NoiseConfig,
) -> Result<(GraphDataset, GraphDataset)> {
    if per_group == 0 {
        return Err(Error::InvalidArgument("per_group must be >= 1".into()));
    }
    if templates.len() != 8 {
        return Err(Error::InvalidArgument(format!("expected 8 templates, got {}", templates.len())));
    }
    for (i, t) in templates.iter().enumerate() {
        if contains_motif(&t.to_graph(0, 1)?) != (template_class(i) > 0) {
            return Err(Error::InvalidArgument(format!(
                "template {} disagrees with its class about the motif",
                i + 1
            )));
        }
    }
    let mut rng = stream_rng(seed, streams::GENERATOR);
    let mut groups = Vec::with_capacity(8);
    for (i, t) in templates.iter().enumerate() {
        groups.push(generate_group(t, template_class(i), per_group, i * per_group, noise, &mut rng)?);
    }
    let test: Vec<Graph> = groups.split_off(4).into_iter().flatten().collect();
    let train: Vec<Graph> = groups.into_iter().flatten().collect();
    Ok((
        GraphDataset::new("synthetic-train", train)?,
        GraphDataset::new("synthetic-test", test)?,
    ))
}

/// Built-in templates with the default noise.
pub fn generate_synthetic_dataset(seed: u64, per_group: usize) -> Result<(GraphDataset, GraphDataset)> {
    generate_from_templates(&builtin_templates(), seed, per_group, &NoiseConfig::default())
}

/// `n` noisy graphs cycling through all eight templates, for timing runs.
pub fn generate_mixed(seed: u64, n: usize) -> Result<GraphDataset> {
    let templates = builtin_templates();
    let noise = NoiseConfig::default();
    let mut rng = stream_rng(seed, streams::GENERATOR);
    let mut graphs = Vec::with_capacity(n);
    for k in 0..n {
        let t = k % templates.len();
        graphs.extend(generate_group(&templates[t], template_class(t), 1, k, &noise, &mut rng)?);
    }
    GraphDataset::new("synthetic-mixed", graphs)
}
