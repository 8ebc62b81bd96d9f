//! Step-function graphons: estimation by degree alignment and averaging,
//! sampling, binarization, motif/context partitioning and homomorphism
//! densities.
//!
//! Cell `i` of a `K`-resolution graphon covers the interval `[i/K, (i+1)/K)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mat::Mat;
use crate::math;
use crate::rng;

/// Largest motif accepted by [`homomorphism_density`].
pub const MAX_MOTIF_NODES: usize = 5;

/// `K × K` symmetric matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Graphon {
    w: Mat,
}

impl Graphon {
    pub fn new(w: Mat) -> Result<Self> {
        if w.rows() == 0 || w.rows() != w.cols() {
            return Err(Error::arg(format!(
                "graphon must be square with K >= 1, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                let v = w[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::arg(format!(
                        "graphon entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if v != w[(j, i)] {
                    return Err(Error::arg(format!("graphon asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Graphon { w })
    }

    /// Constant graphon; the diagonal carries the same value.
    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Graphon::new(Mat::filled(k, k, value))
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Mat {
        &self.w
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Top-left `k × k` block (itself when `k >= K`).
    pub fn truncated(&self, k: usize) -> Graphon {
        let k = k.min(self.k()).max(1);
        Graphon {
            w: Mat::from_fn(k, k, |i, j| self.w[(i, j)]),
        }
    }
}

/// Node order by descending degree, ties by ascending id. Entry `p` is the
/// original id placed at aligned position `p`.
pub fn align_nodes(g: &Graph) -> Vec<usize> {
    let deg = g.degree_sequence();
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
    order
}

/// `K × K` top block of the adjacency under `order`, zero padded when the
/// graph has fewer than `K` nodes.
pub fn aligned_block(g: &Graph, order: &[usize], k: usize) -> Mat {
    let m = k.min(order.len());
    let mut out = Mat::zeros(k, k);
    for i in 0..m {
        for j in 0..m {
            if g.has_edge(order[i], order[j]) {
                out[(i, j)] = 1.0;
            }
        }
    }
    out
}

/// Default resolution: the rounded mean node count (at least 1).
pub fn default_resolution(graphs: &[Graph]) -> usize {
    let mean = graphs.iter().map(|g| g.n() as f64).sum::<f64>() / graphs.len().max(1) as f64;
    (math::round(mean) as usize).max(1)
}

/// Averages the degree-aligned top-`K` adjacency blocks. Summation runs in
/// input order so results are bit-stable.
pub fn estimate_graphon(graphs: &[Graph], k: Option<usize>) -> Result<Graphon> {
    if graphs.is_empty() {
        return Err(Error::arg(
            "cannot estimate a graphon from an empty graph list",
        ));
    }
    let k = match k {
        Some(0) => return Err(Error::arg("graphon resolution K must be >= 1")),
        Some(k) => k,
        None => default_resolution(graphs),
    };
    let mut acc = Mat::zeros(k, k);
    for g in graphs {
        acc.add_assign(&aligned_block(g, &align_nodes(g), k));
    }
    acc.scale(1.0 / graphs.len() as f64);
    Graphon::new(acc)
}

/// Cell of node `i` among `n` nodes under a `k`-cell partition.
#[inline]
pub fn cell_of(i: usize, n: usize, k: usize) -> usize {
    i * k / n
}

/// Samples an `n`-node graph: edge `(i, j)` with probability
/// `W[cell(i)][cell(j)]`, independently for `i < j`.
pub fn sample_graph(w: &Graphon, n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::arg("sampled graph needs n >= 1"));
    }
    let mut rng = rng::stream(seed, "sample-graph", n as u64);
    let k = w.k();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = w.get(cell_of(i, n, k), cell_of(j, n, k));
            if rng.random::<f64>() < p {
                g.set_edge(i, j, true);
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BinarizeMode {
    /// One Bernoulli draw per unordered cell pair (diagonal included).
    Stochastic { seed: u64 },
    /// Entry is 1 iff `W[i][j] >= t`.
    Threshold(f64),
}

impl Default for BinarizeMode {
    fn default() -> Self {
        BinarizeMode::Threshold(0.5)
    }
}

/// 0/1 matrix from a graphon.
pub fn binarize(w: &Graphon, mode: BinarizeMode) -> Result<Mat> {
    let k = w.k();
    let mut out = Mat::zeros(k, k);
    match mode {
        BinarizeMode::Threshold(t) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::arg(format!("threshold {t} not in [0, 1]")));
            }
            for i in 0..k {
                for j in 0..k {
                    out[(i, j)] = if w.get(i, j) >= t { 1.0 } else { 0.0 };
                }
            }
        }
        BinarizeMode::Stochastic { seed } => {
            let mut rng = rng::stream(seed, "binarize", k as u64);
            for i in 0..k {
                for j in i..k {
                    let b = if rng.random::<f64>() < w.get(i, j) {
                        1.0
                    } else {
                        0.0
                    };
                    out[(i, j)] = b;
                    out[(j, i)] = b;
                }
            }
        }
    }
    Ok(out)
}

/// Number of vertex maps `motif -> g` that send every motif edge to an edge.
pub fn homomorphism_count(motif: &Graph, g: &Graph) -> Result<u64> {
    if motif.n() > MAX_MOTIF_NODES {
        return Err(Error::Capability(format!(
            "homomorphism enumeration is limited to motifs of at most {MAX_MOTIF_NODES} nodes, got {}",
            motif.n()
        )));
    }
    // Earlier-assigned neighbours of each motif vertex; partial maps that
    // break an edge are pruned, which leaves the count unchanged.
    let back: Vec<Vec<usize>> = (0..motif.n())
        .map(|v| (0..v).filter(|&u| motif.has_edge(u, v)).collect())
        .collect();
    let mut image = alloc::vec![0usize; motif.n()];
    Ok(count_maps(0, &back, g, &mut image))
}

fn count_maps(v: usize, back: &[Vec<usize>], g: &Graph, image: &mut [usize]) -> u64 {
    if v == back.len() {
        return 1;
    }
    let mut total = 0;
    for x in 0..g.n() {
        if back[v].iter().all(|&u| g.has_edge(image[u], x)) {
            image[v] = x;
            total += count_maps(v + 1, back, g, image);
        }
    }
    total
}

/// `t(F, G) = hom(F, G) / |V(G)|^{|V(F)|}`.
pub fn homomorphism_density(motif: &Graph, g: &Graph) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::arg(
            "homomorphism density needs a non-empty target graph",
        ));
    }
    let hom = homomorphism_count(motif, g)?;
    Ok(hom as f64 / libm::pow(g.n() as f64, motif.n() as f64))
}

/// Motif and context node sets of a graph relative to a graphon.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotifContextPartition {
    /// First `min(K, n)` nodes in alignment order.
    pub motif_nodes: Vec<usize>,
    /// Remaining nodes in alignment order.
    pub context_nodes: Vec<usize>,
    /// Output of [`align_nodes`].
    pub alignment: Vec<usize>,
}

impl MotifContextPartition {
    /// True when the graph is no larger than the graphon and has no context.
    pub fn context_is_empty(&self) -> bool {
        self.context_nodes.is_empty()
    }
}

pub fn partition_motif_context(g: &Graph, w: &Graphon) -> MotifContextPartition {
    let alignment = align_nodes(g);
    let m = w.k().min(g.n());
    MotifContextPartition {
        motif_nodes: alignment[..m].to_vec(),
        context_nodes: alignment[m..].to_vec(),
        alignment,
    }
}
