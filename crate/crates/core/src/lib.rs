//! Weisfeiler-Lehman graph embeddings, optimal-transport graph distances and
//! learned label weights for graph classification.

pub mod error;
pub mod graph;
pub mod kernels;
pub mod learning;
pub mod seeds;
pub mod synthetic;
pub mod transport;
pub mod tu;
pub mod wl;

pub use error::{Error, Result};
pub use graph::{ClassLabel, DatasetStats, Graph, GraphDataset};
pub use kernels::{KernelKind, KernelMatrix, PairFeature, SquareMatrix, WeightVector};
pub use wl::WlRefinement;
