//! Undirected simple graphs, labeled datasets and their basic operations.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::{math, rng};

/// Default cap for one-hot degree features.
pub const DEFAULT_DEGREE_BUCKETS: usize = 32;

/// Undirected simple graph over dense node ids `0..n`.
///
/// The adjacency is stored as a full symmetric `n × n` byte matrix with a zero
/// diagonal. A graph with `n = 0` is the empty sentinel returned by
/// [`Graph::induced_subgraph`] for an empty node set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Graph {
    n: usize,
    adj: Vec<u8>,
}

/// Result of building a graph from a raw edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeListReport {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    /// `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![0; n * n],
        }
    }

    /// Builds a graph from undirected edges. Fails on out-of-range endpoints;
    /// self loops and repeated edges are an error here (use
    /// [`Graph::from_edge_list`] for lenient ingestion).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let (g, report) = Self::from_edge_list(n, edges.iter().copied())?;
        if report.self_loops > 0 {
            return Err(Error::Graph("self loop in edge list".into()));
        }
        Ok(g)
    }

    /// Lenient constructor: drops self loops and duplicate edges, counting them.
    pub fn from_edge_list(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(Self, EdgeListReport)> {
        let mut g = Graph::empty(n);
        let mut report = EdgeListReport::default();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            if g.has_edge(u, v) {
                report.duplicates += 1;
                continue;
            }
            g.set_edge(u, v, true);
        }
        Ok((g, report))
    }

    /// Builds a graph from a dense 0/1 matrix. The matrix must be symmetric
    /// with a zero diagonal.
    pub fn from_adjacency(m: &Mat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Graph("adjacency is not square".into()));
        }
        let n = m.rows();
        let mut g = Graph::empty(n);
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let a = m[(i, j)];
                if a != m[(j, i)] {
                    return Err(Error::Graph(format!("asymmetric entry ({i}, {j})")));
                }
                if a != 0.0 && a != 1.0 {
                    return Err(Error::Graph(format!("non-binary entry ({i}, {j}) = {a}")));
                }
                g.set_edge(i, j, a == 1.0);
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v] != 0
    }

    /// Sets or clears the undirected edge `{u, v}`. Ignores `u == v`.
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        if u == v {
            return;
        }
        let b = u8::from(present);
        self.adj[u * self.n + v] = b;
        self.adj[v * self.n + u] = b;
    }

    /// Edges as `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&a| a != 0).count() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u * self.n..(u + 1) * self.n]
            .iter()
            .filter(|&&a| a != 0)
            .count()
    }

    /// Row sums of the adjacency.
    pub fn degree_sequence(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.has_edge(u, v))
    }

    /// Dense 0/1 adjacency.
    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| f64::from(self.adj[i * self.n + j]))
    }

    /// Restricts the graph to `nodes`; new id `k` is `nodes[k]`.
    ///
    /// An empty node list yields the `n = 0` sentinel. Panics on an id out of
    /// range or a repeated id.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut seen = BTreeSet::new();
        for &u in nodes {
            assert!(u < self.n, "node {u} out of range");
            assert!(seen.insert(u), "node {u} repeated");
        }
        let m = nodes.len();
        let mut g = Graph::empty(m);
        for a in 0..m {
            for b in (a + 1)..m {
                if self.has_edge(nodes[a], nodes[b]) {
                    g.set_edge(a, b, true);
                }
            }
        }
        g
    }

    /// Relabels nodes so that new id `k` is old id `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Graph {
        assert_eq!(order.len(), self.n, "permutation length mismatch");
        self.induced_subgraph(order)
    }

    /// One-hot degree features, degrees capped at `buckets - 1`.
    pub fn degree_features(&self, buckets: usize) -> Mat {
        let buckets = buckets.max(1);
        let mut x = Mat::zeros(self.n, buckets);
        for u in 0..self.n {
            x[(u, self.degree(u).min(buckets - 1))] = 1.0;
        }
        x
    }
}

/// Common small graphs used by fixtures and tests.
pub mod named {
    use super::Graph;
    use alloc::vec::Vec;

    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.set_edge(u, v, true);
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        if n >= 3 {
            for u in 0..n {
                g.set_edge(u, (u + 1) % n, true);
            }
        }
        g
    }

    pub fn path(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for u in 1..n {
            g.set_edge(u - 1, u, true);
        }
        g
    }

    /// Star with `center` joined to every other node.
    pub fn star(n: usize, center: usize) -> Graph {
        let mut g = Graph::empty(n);
        let leaves: Vec<usize> = (0..n).filter(|&v| v != center).collect();
        for v in leaves {
            g.set_edge(center, v, true);
        }
        g
    }
}

/// Ground-truth role of a node in a planted-motif graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Role {
    Motif,
    Context,
}

/// Disjoint train / validation / test index sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Everything in `train`.
    pub fn all_train(len: usize) -> Self {
        Split {
            train: (0..len).collect(),
            ..Split::default()
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        let mut seen = vec![false; len];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= len {
                return Err(Error::Graph(format!("split index {i} out of range")));
            }
            if seen[i] {
                return Err(Error::Graph(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Graph(format!(
                "split does not cover index {missing}"
            )));
        }
        Ok(())
    }
}

/// Graph collection with class labels and a designated anomalous class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub anomaly_class: usize,
    pub split: Split,
    /// Per-graph node roles when known (planted-motif data only).
    pub roles: Option<Vec<Vec<Role>>>,
}

impl LabeledDataset {
    /// Validates the invariants and wraps the parts.
    pub fn new(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        labels: Vec<usize>,
        anomaly_class: usize,
        split: Split,
    ) -> Result<Self> {
        let ds = LabeledDataset {
            name: name.into(),
            graphs,
            labels,
            anomaly_class,
            split,
            roles: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.graphs.len() != self.labels.len() {
            return Err(Error::Graph(format!(
                "{} graphs but {} labels",
                self.graphs.len(),
                self.labels.len()
            )));
        }
        if !self.graphs.is_empty() && !self.labels.contains(&self.anomaly_class) {
            return Err(Error::Graph(format!(
                "anomaly class {} not present in labels",
                self.anomaly_class
            )));
        }
        if let Some(roles) = &self.roles {
            if roles.len() != self.graphs.len()
                || roles
                    .iter()
                    .zip(&self.graphs)
                    .any(|(r, g)| r.len() != g.n())
            {
                return Err(Error::Graph("role metadata does not match graphs".into()));
            }
        }
        self.split.validate(self.graphs.len())
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.labels.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn mean_node_count(&self) -> f64 {
        if self.graphs.is_empty() {
            return 0.0;
        }
        self.graphs.iter().map(|g| g.n() as f64).sum::<f64>() / self.graphs.len() as f64
    }

    /// Keeps `keep_fraction` of the `anomaly_class` graphs (at least one),
    /// relabels them 0 and every other graph 1. The split is reset to
    /// all-train; call [`LabeledDataset::resplit`] afterwards.
    pub fn downsample_anomalies(
        &self,
        anomaly_class: usize,
        keep_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(Error::config(format!(
                "downsample fraction {keep_fraction} not in (0, 1]"
            )));
        }
        let mut anomalous: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] == anomaly_class)
            .collect();
        if anomalous.is_empty() {
            return Err(Error::config(format!(
                "anomaly class {anomaly_class} has no graphs"
            )));
        }
        let keep = (math::round(anomalous.len() as f64 * keep_fraction) as usize)
            .clamp(1, anomalous.len());
        let mut rng = rng::stream(seed, "downsample", 0);
        anomalous.shuffle(&mut rng);
        let mut kept: BTreeSet<usize> = anomalous[..keep].iter().copied().collect();
        kept.extend((0..self.len()).filter(|&i| self.labels[i] != anomaly_class));

        let mut graphs = Vec::with_capacity(kept.len());
        let mut labels = Vec::with_capacity(kept.len());
        let mut roles = self.roles.as_ref().map(|_| Vec::with_capacity(kept.len()));
        for &i in &kept {
            graphs.push(self.graphs[i].clone());
            labels.push(usize::from(self.labels[i] != anomaly_class));
            if let (Some(out), Some(src)) = (roles.as_mut(), self.roles.as_ref()) {
                out.push(src[i].clone());
            }
        }
        let n = graphs.len();
        let ds = LabeledDataset {
            name: self.name.clone(),
            graphs,
            labels,
            anomaly_class: 0,
            split: Split::all_train(n),
            roles,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Stratified split with the given train/validation/test weights. Each
    /// class is shuffled independently and cut proportionally, with every
    /// class represented in train whenever it has a graph.
    pub fn resplit(&mut self, ratios: [f64; 3], seed: u64) -> Result<()> {
        let total: f64 = ratios.iter().sum();
        if ratios.iter().any(|r| *r < 0.0 || !r.is_finite()) || total <= 0.0 {
            return Err(Error::config(
                "split ratios must be non-negative with a positive sum",
            ));
        }
        let mut split = Split::default();
        for (ci, class) in self.classes().into_iter().enumerate() {
            let mut idx: Vec<usize> = (0..self.len())
                .filter(|&i| self.labels[i] == class)
                .collect();
            let mut rng = rng::stream(seed, "split", ci as u64);
            idx.shuffle(&mut rng);
            let m = idx.len();
            let mut n_train = math::round((m as f64) * ratios[0] / total) as usize;
            if ratios[0] > 0.0 {
                n_train = n_train.max(1);
            }
            let n_train = n_train.min(m);
            let n_val = (math::round((m as f64) * ratios[1] / total) as usize).min(m - n_train);
            split.train.extend_from_slice(&idx[..n_train]);
            split
                .validation
                .extend_from_slice(&idx[n_train..n_train + n_val]);
            split.test.extend_from_slice(&idx[n_train + n_val..]);
        }
        split.train.sort_unstable();
        split.validation.sort_unstable();
        split.test.sort_unstable();
        self.split = split;
        self.validate()
    }

    /// `(graph, label)` pairs for an index set.
    pub fn subset(&self, idx: &[usize]) -> Vec<(Graph, usize)> {
        idx.iter()
            .map(|&i| (self.graphs[i].clone(), self.labels[i]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::named::*;
    use super::*;

    #[test]
    fn degree_sequences() {
        assert_eq!(complete(3).degree_sequence(), vec![2, 2, 2]);
        assert_eq!(star(4, 0).degree_sequence(), vec![3, 1, 1, 1]);
        assert_eq!(cycle(5).degree_sequence(), vec![2; 5]);
    }

    #[test]
    fn induced_subgraph_examples() {
        assert_eq!(complete(4).induced_subgraph(&[0, 1, 2]), complete(3));
        let two = path(4).induced_subgraph(&[0, 3]);
        assert_eq!((two.n(), two.edge_count()), (2, 0));
        // C5 restricted to {0,1,2}: adjacency rows checked by hand.
        let p = cycle(5).induced_subgraph(&[0, 1, 2]);
        assert_eq!(p.edges(), vec![(0, 1), (1, 2)]);
        assert!(complete(3).induced_subgraph(&[]).is_empty());
    }

    #[test]
    fn induced_subgraph_keeps_input_order() {
        let g = star(4, 2).induced_subgraph(&[2, 0, 1, 3]);
        assert_eq!(g.degree_sequence(), vec![3, 1, 1, 1]);
    }

    #[test]
    fn edge_list_drops_loops_and_duplicates() {
        let (g, rep) = Graph::from_edge_list(3, [(0, 1), (1, 0), (2, 2), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(
            rep,
            EdgeListReport {
                duplicates: 1,
                self_loops: 1
            }
        );
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn adjacency_roundtrip_and_validation() {
        let g = cycle(5);
        assert_eq!(Graph::from_adjacency(&g.to_mat()).unwrap(), g);
        let mut bad = g.to_mat();
        bad[(0, 1)] = 0.0;
        assert!(Graph::from_adjacency(&bad).is_err());
    }

    #[test]
    fn degree_features_cap() {
        let x = star(5, 0).degree_features(3);
        assert_eq!(x[(0, 2)], 1.0);
        assert_eq!(x[(1, 1)], 1.0);
        assert_eq!(x.col_sums(), vec![0.0, 4.0, 1.0]);
    }

    fn toy_dataset() -> LabeledDataset {
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            graphs.push(if i % 2 == 0 { complete(4) } else { cycle(4) });
            labels.push(i % 2);
        }
        LabeledDataset::new("toy", graphs, labels, 0, Split::all_train(40)).unwrap()
    }

    #[test]
    fn downsample_relabels_and_keeps_fraction() {
        let ds = toy_dataset().downsample_anomalies(0, 0.1, 3).unwrap();
        assert_eq!(ds.len(), 22);
        assert_eq!(ds.labels.iter().filter(|&&l| l == 0).count(), 2);
        assert!(ds
            .graphs
            .iter()
            .zip(&ds.labels)
            .all(|(g, &l)| (g.edge_count() == 6) == (l == 0)));
        assert!(toy_dataset().downsample_anomalies(0, 0.0, 3).is_err());
    }

    #[test]
    fn resplit_is_disjoint_cover_and_stratified() {
        let mut ds = toy_dataset();
        ds.resplit([2.0, 4.0, 4.0], 1).unwrap();
        assert_eq!(ds.split.train.len(), 8);
        assert_eq!(ds.split.validation.len(), 16);
        assert_eq!(ds.split.test.len(), 16);
        for class in 0..2 {
            assert!(ds.split.train.iter().any(|&i| ds.labels[i] == class));
        }
    }

    #[test]
    fn dataset_invariants_are_checked() {
        assert!(
            LabeledDataset::new("x", vec![complete(2)], vec![1], 0, Split::all_train(1)).is_err()
        );
        assert!(
            LabeledDataset::new("x", vec![complete(2)], vec![0, 1], 0, Split::all_train(1))
                .is_err()
        );
        let overlap = Split {
            train: vec![0],
            validation: vec![0],
            test: vec![],
        };
        assert!(LabeledDataset::new("x", vec![complete(2)], vec![0], 0, overlap).is_err());
    }
}
