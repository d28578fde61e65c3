//! Reader and writer for the TU-Dortmund flat-file graph format.
//!
//! A dataset `DS` lives in one directory as
//!
//! * `DS_A.txt`: one `u, v` adjacency pair per line, 1-based global node ids
//! * `DS_graph_indicator.txt`: graph id (1-based) of node `i` on line `i`
//! * `DS_graph_labels.txt`: class label of graph `i` on line `i`
//! * `DS_node_labels.txt`: integer label of node `i` on line `i`
//!
//! Adjacency is usually listed in both directions; `(u, v)` and `(v, u)` collapse
//! into one undirected edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{ClassLabel, Graph, GraphDataset};

fn dataset_file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_int<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected an integer, found {field:?}"),
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Maps the raw class values onto `{-1, +1}`. Values already in that set are
/// kept; otherwise the smaller value becomes `-1`.
fn normalize_classes(raw: &[i64]) -> Result<Vec<ClassLabel>> {
    let distinct: BTreeSet<i64> = raw.iter().copied().collect();
    if distinct.len() > 2 {
        return Err(Error::InvalidDataset(format!(
            "expected a binary problem, found class labels {distinct:?}"
        )));
    }
    let already_signed = distinct.iter().all(|&c| c == -1 || c == 1);
    let low = distinct.iter().next().copied();
    Ok(raw
        .iter()
        .map(|&c| {
            if already_signed {
                c as ClassLabel
            } else if distinct.len() == 2 && Some(c) == low {
                -1
            } else {
                1
            }
        })
        .collect())
}

/// Loads `<dir>/<name>_*.txt` into a [`GraphDataset`].
pub fn parse_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<GraphDataset> {
    let dir = dir.as_ref();
    let a_path = dataset_file(dir, name, "A");
    let ind_path = dataset_file(dir, name, "graph_indicator");
    let gl_path = dataset_file(dir, name, "graph_labels");
    let nl_path = dataset_file(dir, name, "node_labels");
    for p in [&a_path, &ind_path, &gl_path, &nl_path] {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }

    let indicator: Vec<(usize, usize)> = read_lines(&ind_path)?
        .into_iter()
        .map(|(ln, l)| parse_int::<usize>(&ind_path, ln, &l).map(|g| (ln, g)))
        .collect::<Result<_>>()?;
    let node_labels: Vec<(usize, u32)> = read_lines(&nl_path)?
        .into_iter()
        .map(|(ln, l)| {
            // some datasets carry extra comma-separated columns; the first is the label
            let first = l.split(',').next().unwrap_or("");
            parse_int::<u32>(&nl_path, ln, first).map(|v| (ln, v))
        })
        .collect::<Result<_>>()?;
    let raw_classes: Vec<(usize, i64)> = read_lines(&gl_path)?
        .into_iter()
        .map(|(ln, l)| parse_int::<i64>(&gl_path, ln, &l).map(|v| (ln, v)))
        .collect::<Result<_>>()?;

    let n_nodes = indicator.len();
    if node_labels.len() != n_nodes {
        return Err(parse_err(
            &nl_path,
            node_labels.last().map_or(0, |x| x.0),
            format!("{} node labels for {} nodes", node_labels.len(), n_nodes),
        ));
    }
    let n_graphs = raw_classes.len();

    // node -> (graph index, local index)
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_graphs];
    let mut local = vec![(0usize, 0u32); n_nodes];
    for (node, &(ln, gid)) in indicator.iter().enumerate() {
        if gid == 0 || gid > n_graphs {
            return Err(parse_err(
                &ind_path,
                ln,
                format!("graph id {gid} outside 1..={n_graphs}"),
            ));
        }
        let g = gid - 1;
        local[node] = (g, members[g].len() as u32);
        members[g].push(node);
    }
    if let Some(g) = members.iter().position(Vec::is_empty) {
        return Err(Error::InvalidDataset(format!("graph {} has zero nodes", g + 1)));
    }

    let mut edges: Vec<BTreeSet<(u32, u32)>> = vec![BTreeSet::new(); n_graphs];
    for (ln, l) in read_lines(&a_path)? {
        let mut parts = l.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(&a_path, ln, format!("expected `u, v`, found {l:?}")));
        };
        let u: usize = parse_int(&a_path, ln, a)?;
        let v: usize = parse_int(&a_path, ln, b)?;
        for x in [u, v] {
            if x == 0 || x > n_nodes {
                return Err(parse_err(&a_path, ln, format!("node id {x} outside 1..={n_nodes}")));
            }
        }
        let (gu, lu) = local[u - 1];
        let (gv, lv) = local[v - 1];
        if gu != gv {
            return Err(parse_err(
                &a_path,
                ln,
                format!("edge ({u}, {v}) joins graphs {} and {}", gu + 1, gv + 1),
            ));
        }
        if lu == lv {
            return Err(parse_err(&a_path, ln, format!("self-loop on node {u}")));
        }
        edges[gu].insert((lu.min(lv), lu.max(lv)));
    }

    let classes = normalize_classes(&raw_classes.iter().map(|c| c.1).collect::<Vec<_>>())?;
    let graphs = members
        .iter()
        .zip(edges)
        .zip(classes)
        .enumerate()
        .map(|(g, ((nodes, e), class))| {
            let labels = nodes.iter().map(|&n| node_labels[n].1).collect();
            Graph::new(g + 1, labels, e, class)
        })
        .collect::<Result<Vec<_>>>()?;
    GraphDataset::new(name, graphs)
}

/// Writes `ds` as `<dir>/<name>_*.txt`, edges listed in both directions.
/// Graph ids are renumbered 1..=n in dataset order.
pub fn write_tu_dataset(ds: &GraphDataset, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut a = Vec::new();
    let mut ind = Vec::new();
    let mut gl = Vec::new();
    let mut nl = Vec::new();
    let mut offset = 0usize;
    for (gi, g) in ds.graphs().iter().enumerate() {
        let mut pairs = BTreeMap::new();
        for &(u, v) in g.edges() {
            pairs.insert((u, v), ());
            pairs.insert((v, u), ());
        }
        for (u, v) in pairs.keys() {
            writeln!(a, "{}, {}", offset + *u as usize + 1, offset + *v as usize + 1)?;
        }
        for &l in g.node_labels() {
            writeln!(ind, "{}", gi + 1)?;
            writeln!(nl, "{l}")?;
        }
        writeln!(gl, "{}", g.class_label())?;
        offset += g.num_nodes();
    }
    for (suffix, bytes) in [
        ("A", a),
        ("graph_indicator", ind),
        ("graph_labels", gl),
        ("node_labels", nl),
    ] {
        fs::write(dataset_file(dir, name, suffix), bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, a: &str, ind: &str, gl: &str, nl: &str) {
        fs::write(dataset_file(dir, name, "A"), a).unwrap();
        fs::write(dataset_file(dir, name, "graph_indicator"), ind).unwrap();
        fs::write(dataset_file(dir, name, "graph_labels"), gl).unwrap();
        fs::write(dataset_file(dir, name, "node_labels"), nl).unwrap();
    }

    #[test]
    fn single_isolated_node() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "ONE", "", "1\n", "1\n", "4\n");
        let ds = parse_tu_dataset(tmp.path(), "ONE").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs()[0].num_nodes(), 1);
        assert_eq!(ds.graphs()[0].num_edges(), 0);
    }

    #[test]
    fn merges_reverse_pairs_and_remaps_classes() {
        let tmp = tempfile::tempdir().unwrap();
        write(
            tmp.path(),
            "T",
            "1, 2\n2, 1\n2, 3\n4, 5\n",
            "1\n1\n1\n2\n2\n",
            "0\n2\n",
            "0\n1\n0\n2\n2\n",
        );
        let ds = parse_tu_dataset(tmp.path(), "T").unwrap();
        assert_eq!(ds.graphs()[0].edges(), &[(0, 1), (1, 2)]);
        assert_eq!(ds.graphs()[1].edges(), &[(0, 1)]);
        assert_eq!(ds.class_labels(), vec![-1, 1]);
        assert_eq!(ds.label_alphabet(), &[0, 1, 2]);
    }

    #[test]
    fn reports_missing_file_by_name() {
        let tmp = tempfile::tempdir().unwrap();
        let err = parse_tu_dataset(tmp.path(), "NOPE").unwrap_err();
        assert!(err.to_string().contains("NOPE_A.txt"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_node() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "T", "1, 3\n", "1\n1\n", "1\n", "0\n0\n");
        let err = parse_tu_dataset(tmp.path(), "T").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_empty_graph_and_multiclass() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "T", "", "1\n3\n", "1\n-1\n1\n", "0\n0\n");
        assert!(matches!(
            parse_tu_dataset(tmp.path(), "T").unwrap_err(),
            Error::InvalidDataset(_)
        ));
        write(tmp.path(), "U", "", "1\n2\n3\n", "0\n1\n2\n", "0\n0\n0\n");
        assert!(matches!(
            parse_tu_dataset(tmp.path(), "U").unwrap_err(),
            Error::InvalidDataset(_)
        ));
    }

    #[test]
    fn rejects_garbage_with_line_context() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "T", "1, 2\nx, 1\n", "1\n1\n", "1\n", "0\n0\n");
        let err = parse_tu_dataset(tmp.path(), "T").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }
}
