//! Benchmark dataset layout: `<name>_A.txt`, `<name>_graph_indicator.txt`
//! and `<name>_graph_labels.txt` in one directory, with 1-based node and
//! graph ids.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use motifcar_core::{Graph, LabeledDataset, Split};

use crate::error::{Error, Result};

/// Input irregularities that were repaired while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops: usize,
    /// Directed edge lines seen before.
    pub duplicates: usize,
    /// Undirected edges listed in one direction only.
    pub asymmetric: usize,
    /// Original label value of each class id.
    pub label_values: Vec<i64>,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.self_loops > 0 {
            out.push(format!("dropped {} self loop(s)", self.self_loops));
        }
        if self.duplicates > 0 {
            out.push(format!(
                "dropped {} duplicate edge line(s)",
                self.duplicates
            ));
        }
        if self.asymmetric > 0 {
            out.push(format!(
                "symmetrized {} one-directional edge(s)",
                self.asymmetric
            ));
        }
        out
    }
}

fn part(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_int<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| {
        Error::format(
            path,
            line,
            format!("expected an integer, found {:?}", s.trim()),
        )
    })
}

/// Loads `<dir>/<name>_*.txt`. Labels are mapped to class ids `0..C` in
/// ascending order of their file values; class 0 is the anomaly class.
pub fn load(dir: &Path, name: &str) -> Result<(LabeledDataset, LoadReport)> {
    let ind_path = part(dir, name, "graph_indicator");
    let lab_path = part(dir, name, "graph_labels");
    let a_path = part(dir, name, "A");

    let mut node_graph = Vec::new();
    for (line, l) in lines(&read(&ind_path)?) {
        let g: usize = parse_int(&ind_path, line, l)?;
        if g == 0 {
            return Err(Error::format(&ind_path, line, "graph ids start at 1"));
        }
        if let Some(&prev) = node_graph.last() {
            if g < prev {
                return Err(Error::format(
                    &ind_path,
                    line,
                    "graph ids must be non-decreasing",
                ));
            }
        }
        node_graph.push(g);
    }
    let mut raw_labels = Vec::new();
    for (line, l) in lines(&read(&lab_path)?) {
        raw_labels.push(parse_int::<i64>(&lab_path, line, l)?);
    }
    let n_graphs = raw_labels.len();
    if let Some(&last) = node_graph.last() {
        if last > n_graphs {
            return Err(Error::format(
                &ind_path,
                node_graph.len(),
                format!("graph id {last} but only {n_graphs} labels"),
            ));
        }
    }
    // First global node index and node count of every graph.
    let mut first = vec![usize::MAX; n_graphs];
    let mut count = vec![0usize; n_graphs];
    for (v, &g) in node_graph.iter().enumerate() {
        if first[g - 1] == usize::MAX {
            first[g - 1] = v;
        }
        count[g - 1] += 1;
    }

    let mut report = LoadReport::default();
    let mut directed: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n_graphs];
    for (line, l) in lines(&read(&a_path)?) {
        let (a, b) = l.split_once(',').ok_or_else(|| {
            Error::format(&a_path, line, format!("expected \"u, v\", found {l:?}"))
        })?;
        let (u, v): (usize, usize) = (parse_int(&a_path, line, a)?, parse_int(&a_path, line, b)?);
        for x in [u, v] {
            if x == 0 || x > node_graph.len() {
                return Err(Error::format(
                    &a_path,
                    line,
                    format!("node {x} is not assigned to any graph"),
                ));
            }
        }
        let (gu, gv) = (node_graph[u - 1], node_graph[v - 1]);
        if gu != gv {
            return Err(Error::format(
                &a_path,
                line,
                format!("edge {u}-{v} joins graphs {gu} and {gv}"),
            ));
        }
        if u == v {
            report.self_loops += 1;
            continue;
        }
        let base = first[gu - 1];
        if !directed[gu - 1].insert((u - 1 - base, v - 1 - base)) {
            report.duplicates += 1;
        }
    }

    let values: BTreeSet<i64> = raw_labels.iter().copied().collect();
    report.label_values = values.iter().copied().collect();
    let class_of: BTreeMap<i64, usize> = report
        .label_values
        .iter()
        .enumerate()
        .map(|(c, &v)| (v, c))
        .collect();

    let mut graphs = Vec::with_capacity(n_graphs);
    for (g, arcs) in directed.iter().enumerate() {
        report.asymmetric += arcs
            .iter()
            .filter(|&&(u, v)| !arcs.contains(&(v, u)))
            .count();
        let (graph, _) = Graph::from_edge_list(count[g], arcs.iter().copied())?;
        graphs.push(graph);
    }
    let labels: Vec<usize> = raw_labels.iter().map(|v| class_of[v]).collect();
    let ds = LabeledDataset::new(name, graphs, labels, 0, Split::all_train(n_graphs))?;
    Ok((ds, report))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the three files, listing each edge in both directions. Class ids
/// are written as labels.
pub fn save(ds: &LabeledDataset, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let a_path = part(dir, name, "A");
    let ind_path = part(dir, name, "graph_indicator");
    let lab_path = part(dir, name, "graph_labels");
    let mut a = create(&a_path)?;
    let mut ind = create(&ind_path)?;
    let mut lab = create(&lab_path)?;
    let mut base = 1;
    for (g, (graph, label)) in ds.graphs.iter().zip(&ds.labels).enumerate() {
        for u in 0..graph.n() {
            for v in graph.neighbors(u) {
                writeln!(a, "{}, {}", base + u, base + v).map_err(|e| Error::io(&a_path, e))?;
            }
            writeln!(ind, "{}", g + 1).map_err(|e| Error::io(&ind_path, e))?;
        }
        writeln!(lab, "{label}").map_err(|e| Error::io(&lab_path, e))?;
        base += graph.n();
    }
    for (w, p) in [
        (&mut a, &a_path),
        (&mut ind, &ind_path),
        (&mut lab, &lab_path),
    ] {
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
