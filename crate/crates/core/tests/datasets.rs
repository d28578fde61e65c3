use std::path::PathBuf;

use wlot_core::synthetic::{builtin_templates, contains_motif, generate_synthetic_dataset, template_class};
use wlot_core::tu::{parse_tu_dataset, write_tu_dataset};
use wlot_core::{Error, Graph};

fn mutag_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/MUTAG")
}

/// Every injective placement of the four motif nodes, checked edge by edge.
fn motif_by_scan(g: &Graph) -> bool {
    let l = g.node_labels();
    let n = g.num_nodes();
    for a in (0..n).filter(|&a| l[a] == 1) {
        for b in (0..n).filter(|&b| l[b] == 0 && g.has_edge(a, b)) {
            for c in (0..n).filter(|&c| c != b && l[c] == 0 && g.has_edge(a, c)) {
                if (0..n).any(|d| l[d] == 2 && (g.has_edge(b, d) || g.has_edge(c, d))) {
                    return true;
                }
            }
        }
    }
    false
}

#[test]
fn mutag_statistics() {
    let ds = parse_tu_dataset(mutag_dir(), "MUTAG").unwrap();
    let s = ds.stats().unwrap();
    assert_eq!(s.n_graphs, 188);
    assert_eq!(s.class_counts.get(&1), Some(&125));
    assert_eq!(s.class_counts.get(&-1), Some(&63));
    assert_eq!(s.n_node_labels, 7);
    assert!((s.avg_nodes - 17.9).abs() <= 0.1, "{}", s.avg_nodes);
    assert!((s.avg_directed_edges - 39.6).abs() <= 0.1, "{}", s.avg_directed_edges);
}

#[test]
fn tu_round_trip() {
    let ds = parse_tu_dataset(mutag_dir(), "MUTAG").unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_tu_dataset(&ds, dir.path(), "COPY").unwrap();
    let back = parse_tu_dataset(dir.path(), "COPY").unwrap();
    assert_eq!(back.len(), ds.len());
    for (a, b) in ds.graphs().iter().zip(back.graphs()) {
        assert_eq!(a.node_labels(), b.node_labels());
        assert_eq!(a.class_label(), b.class_label());
        let mut ea = a.edges().to_vec();
        let mut eb = b.edges().to_vec();
        ea.sort_unstable();
        eb.sort_unstable();
        assert_eq!(ea, eb);
    }
}

#[test]
fn missing_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let err = parse_tu_dataset(dir.path(), "NOPE").unwrap_err();
    assert!(err.to_string().contains("NOPE_A.txt"), "{err}");
    assert!(matches!(err, Error::MissingFile(_)));
}

#[test]
fn generated_sets_are_balanced_and_labelled_by_the_motif() {
    let (train, test) = generate_synthetic_dataset(7, 20).unwrap();
    for ds in [&train, &test] {
        assert_eq!(ds.len(), 80);
        let pos = ds.graphs().iter().filter(|g| g.class_label() == 1).count();
        assert_eq!(pos, 40);
        for g in ds.graphs() {
            assert_eq!(motif_by_scan(g), g.class_label() == 1);
            assert_eq!(contains_motif(g), motif_by_scan(g));
        }
    }
}

#[test]
fn templates_agree_with_their_class() {
    let ts = builtin_templates();
    assert_eq!(ts.len(), 8);
    for (i, t) in ts.iter().enumerate() {
        let g = t.to_graph(i, template_class(i)).unwrap();
        assert!((5..=7).contains(&g.num_nodes()));
        assert_eq!(motif_by_scan(&g), template_class(i) == 1, "template {}", i + 1);
    }
}

#[test]
fn generation_is_deterministic() {
    let a = generate_synthetic_dataset(9, 5).unwrap();
    let b = generate_synthetic_dataset(9, 5).unwrap();
    let c = generate_synthetic_dataset(10, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
