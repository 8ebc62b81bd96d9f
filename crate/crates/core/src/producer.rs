//! Raw counterfactual production: merge a motif donor `G` with a context donor
//! `H`, mask the merged adjacency with the graphon-derived matrix and keep the
//! motif nodes of `G` together with the contextual nodes of `H`.
//!
//! Masking is the elementwise product `W^m ⊙ A_p` (logical AND on 0/1
//! matrices), so the mask can only keep or remove edges of `A_p`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, IndexedRandom};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabeledDataset, Role};
use crate::graphon::{align_nodes, binarize, BinarizeMode, Graphon};
use crate::mat::Mat;
use crate::rng;

pub const DEFAULT_ETA: usize = 2;

/// One node of a counterfactual and the donor node it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CfNode {
    pub role: Role,
    /// Original node id in `G` (motif) or `H` (context).
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub g_id: usize,
    pub h_id: usize,
    /// Label of the motif donor, inherited by the counterfactual.
    pub label: usize,
    pub seed: u64,
    pub self_recombination: bool,
    /// No sampled cross edge survived node restriction, so cross edges were
    /// redrawn from the candidate set.
    pub resampled_cross: bool,
}

/// Merged motif/context graph before refinement.
///
/// Nodes `0..n_motif` are the motif nodes of `G` in alignment order, the rest
/// are the contextual nodes of `H` in alignment order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawCounterfactual {
    pub nodes: Vec<CfNode>,
    pub graph: Graph,
    pub n_motif: usize,
    /// Every motif × context pair `(i, j)`, `i < n_motif <= j`.
    pub cross_candidates: Vec<(usize, usize)>,
    /// Cross edges present in `graph`.
    pub initial_cross_edges: Vec<(usize, usize)>,
    pub provenance: Provenance,
}

impl RawCounterfactual {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_context(&self) -> usize {
        self.nodes.len() - self.n_motif
    }

    pub fn label(&self) -> usize {
        self.provenance.label
    }

    pub fn is_cross(&self, i: usize, j: usize) -> bool {
        (i < self.n_motif) != (j < self.n_motif)
    }

    /// Motif-internal and context-internal edges.
    pub fn scaffold_edges(&self) -> Vec<(usize, usize)> {
        self.graph
            .edges()
            .into_iter()
            .filter(|&(i, j)| !self.is_cross(i, j))
            .collect()
    }

    /// Context nodes as a standalone graph.
    pub fn context_graph(&self) -> Graph {
        let ctx: Vec<usize> = (self.n_motif..self.n()).collect();
        self.graph.induced_subgraph(&ctx)
    }
}

/// Merged adjacency `A_p = [A_G, A_C; A_Cᵀ, A_H]` and the cross block `A_C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub ap: Graph,
    pub cross: Mat,
}

/// Block-diagonal merge of two aligned graphs plus `eta` distinct uniformly
/// drawn cross pairs.
pub fn merge_graphs(g: &Graph, h: &Graph, eta: usize, rng: &mut rng::Rng) -> Result<Merged> {
    let (ng, nh) = (g.n(), h.n());
    if eta > ng * nh {
        return Err(Error::arg(format!(
            "eta = {eta} exceeds the {} available cross pairs",
            ng * nh
        )));
    }
    let mut ap = Graph::empty(ng + nh);
    for (u, v) in g.edges() {
        ap.set_edge(u, v, true);
    }
    for (u, v) in h.edges() {
        ap.set_edge(ng + u, ng + v, true);
    }
    let mut cross = Mat::zeros(ng, nh);
    let mut picks = index::sample(rng, ng * nh, eta).into_vec();
    picks.sort_unstable();
    for p in picks {
        let (a, b) = (p / nh, p % nh);
        cross[(a, b)] = 1.0;
        ap.set_edge(a, ng + b, true);
    }
    Ok(Merged { ap, cross })
}

/// Graphon binarized and zero-extended to `n` rows and columns.
fn extended_binary(w: &Graphon, n: usize, mode: BinarizeMode) -> Result<Mat> {
    let b = binarize(w, mode)?;
    let k = w.k();
    Ok(Mat::from_fn(n, n, |i, j| {
        if i < k && j < k {
            b[(i, j)]
        } else {
            0.0
        }
    }))
}

fn split_mode(mode: BinarizeMode, donor: &str) -> BinarizeMode {
    match mode {
        BinarizeMode::Stochastic { seed } => BinarizeMode::Stochastic {
            seed: rng::derive_seed(seed, donor, 0),
        },
        t => t,
    }
}

/// `W^m = [Ŵ_G^ext, A_C; A_Cᵀ, |A_H − Ŵ_H^ext|]`.
pub fn build_mask(
    wg: &Graphon,
    wh: &Graphon,
    a_h: &Graph,
    a_c: &Mat,
    dims: (usize, usize),
    mode: BinarizeMode,
) -> Result<Mat> {
    let (ng, nh) = dims;
    if wg.k() > ng || wh.k() > nh {
        return Err(Error::arg(format!(
            "graphon resolutions ({}, {}) exceed donor sizes ({ng}, {nh})",
            wg.k(),
            wh.k()
        )));
    }
    if a_h.n() != nh || a_c.rows() != ng || a_c.cols() != nh {
        return Err(Error::arg("mask dimension mismatch"));
    }
    let wg_hat = extended_binary(wg, ng, split_mode(mode, "mask-g"))?;
    let wh_hat = extended_binary(wh, nh, split_mode(mode, "mask-h"))?;
    let n = ng + nh;
    Ok(Mat::from_fn(n, n, |i, j| match (i < ng, j < ng) {
        (true, true) => wg_hat[(i, j)],
        (true, false) => a_c[(i, j - ng)],
        (false, true) => a_c[(j, i - ng)],
        (false, false) => {
            let a = if a_h.has_edge(i - ng, j - ng) {
                1.0
            } else {
                0.0
            };
            (a - wh_hat[(i - ng, j - ng)]).abs()
        }
    }))
}

/// Elementwise product of a 0/1 mask with an adjacency.
pub fn apply_mask(mask: &Mat, ap: &Graph) -> Graph {
    let n = ap.n();
    let mut out = Graph::empty(n);
    for (u, v) in ap.edges() {
        if mask[(u, v)] != 0.0 {
            out.set_edge(u, v, true);
        }
    }
    out
}

/// Identity of the donors for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DonorIds {
    pub g_id: usize,
    pub h_id: usize,
    pub label: usize,
}

/// Motif block of the binarized donor graphon has at least one edge.
fn motif_has_structure(wg: &Graphon, mode: BinarizeMode) -> Result<bool> {
    let b = binarize(wg, split_mode(mode, "mask-g"))?;
    let k = wg.k();
    Ok((0..k).any(|i| (0..k).any(|j| i != j && b[(i, j)] != 0.0)))
}

/// Full production of one raw counterfactual.
#[allow(clippy::too_many_arguments)]
pub fn produce_raw_counterfactual(
    g: &Graph,
    h: &Graph,
    wg: &Graphon,
    wh: &Graphon,
    eta: usize,
    seed: u64,
    mode: BinarizeMode,
    ids: DonorIds,
) -> Result<RawCounterfactual> {
    if g.is_empty() || h.is_empty() {
        return Err(Error::Producer("empty donor graph".into()));
    }
    let order_g = align_nodes(g);
    let order_h = align_nodes(h);
    let a_g = g.permuted(&order_g);
    let a_h = h.permuted(&order_h);
    let (ng, nh) = (g.n(), h.n());
    let wg = wg.truncated(ng);
    let wh = wh.truncated(nh);
    let n_motif = wg.k();
    let ctx_start = wh.k();
    if !motif_has_structure(&wg, mode)? {
        return Err(Error::Producer(format!(
            "motif donor G (id {}) has an empty motif under its graphon",
            ids.g_id
        )));
    }
    if ctx_start >= nh {
        return Err(Error::Producer(format!(
            "context donor H (id {}) has no contextual nodes ({nh} nodes, graphon K = {})",
            ids.h_id, ctx_start
        )));
    }

    let mut rng = rng::stream(seed, "produce", 0);
    let merged = merge_graphs(&a_g, &a_h, eta, &mut rng)?;
    let mask = build_mask(&wg, &wh, &a_h, &merged.cross, (ng, nh), mode)?;
    let masked = apply_mask(&mask, &merged.ap);

    // Keep motif nodes of G and contextual nodes of H.
    let keep: Vec<usize> = (0..n_motif).chain((ng + ctx_start)..(ng + nh)).collect();
    let mut graph = masked.induced_subgraph(&keep);
    let n = keep.len();
    let cross_candidates: Vec<(usize, usize)> = (0..n_motif)
        .flat_map(|i| (n_motif..n).map(move |j| (i, j)))
        .collect();
    let mut initial: Vec<(usize, usize)> = cross_candidates
        .iter()
        .copied()
        .filter(|&(i, j)| graph.has_edge(i, j))
        .collect();
    let mut resampled = false;
    if initial.is_empty() {
        resampled = true;
        let count = eta.max(1).min(cross_candidates.len());
        let mut picks = index::sample(&mut rng, cross_candidates.len(), count).into_vec();
        picks.sort_unstable();
        for p in picks {
            let (i, j) = cross_candidates[p];
            graph.set_edge(i, j, true);
            initial.push((i, j));
        }
    }

    let nodes = (0..n_motif)
        .map(|p| CfNode {
            role: Role::Motif,
            source: order_g[p],
        })
        .chain((ctx_start..nh).map(|p| CfNode {
            role: Role::Context,
            source: order_h[p],
        }))
        .collect();
    Ok(RawCounterfactual {
        nodes,
        graph,
        n_motif,
        cross_candidates,
        initial_cross_edges: initial,
        provenance: Provenance {
            g_id: ids.g_id,
            h_id: ids.h_id,
            label: ids.label,
            seed,
            self_recombination: ids.g_id == ids.h_id,
            resampled_cross: resampled,
        },
    })
}

/// Checks the edge-set decomposition of a production: every edge is a
/// graphon-kept edge of `G` among motif nodes, an edge of `H` among contextual
/// nodes that its graphon does not predict, or a motif × context candidate.
pub fn verify_decomposition(
    raw: &RawCounterfactual,
    g: &Graph,
    h: &Graph,
    wg: &Graphon,
    wh: &Graphon,
    mode: BinarizeMode,
) -> Result<()> {
    let wg = wg.truncated(g.n());
    let wh = wh.truncated(h.n());
    let wg_hat = extended_binary(&wg, g.n(), split_mode(mode, "mask-g"))?;
    let wh_hat = extended_binary(&wh, h.n(), split_mode(mode, "mask-h"))?;
    let pos_g = inverse(&align_nodes(g));
    let pos_h = inverse(&align_nodes(h));
    let candidates: BTreeSet<(usize, usize)> = raw.cross_candidates.iter().copied().collect();
    for (i, j) in raw.graph.edges() {
        let (a, b) = (raw.nodes[i], raw.nodes[j]);
        let ok = match (a.role, b.role) {
            (Role::Motif, Role::Motif) => {
                g.has_edge(a.source, b.source) && wg_hat[(pos_g[a.source], pos_g[b.source])] == 1.0
            }
            (Role::Context, Role::Context) => {
                h.has_edge(a.source, b.source) && wh_hat[(pos_h[a.source], pos_h[b.source])] == 0.0
            }
            _ => candidates.contains(&(i.min(j), i.max(j))),
        };
        if !ok {
            return Err(Error::Producer(format!(
                "edge ({i}, {j}) violates the edge-set decomposition"
            )));
        }
    }
    if raw.initial_cross_edges.is_empty() {
        return Err(Error::Producer("no motif-context edge".into()));
    }
    Ok(())
}

fn inverse(order: &[usize]) -> Vec<usize> {
    let mut pos = alloc::vec![0; order.len()];
    for (p, &u) in order.iter().enumerate() {
        pos[u] = p;
    }
    pos
}

/// How context donors are chosen for a motif donor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Pairing {
    #[default]
    SameClass,
    CrossClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ProducerConfig {
    pub eta: usize,
    pub pairing: Pairing,
    /// Counterfactuals per motif donor.
    pub per_graph: usize,
    pub binarize: BinarizeMode,
}

impl Default for ProducerConfig {
    fn default() -> Self {
        ProducerConfig {
            eta: DEFAULT_ETA,
            pairing: Pairing::SameClass,
            per_graph: 1,
            binarize: BinarizeMode::default(),
        }
    }
}

/// Outcome of a batch production.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchReport {
    pub produced: Vec<RawCounterfactual>,
    /// `(g_id, reason)` for donors that could not be used.
    pub skipped: Vec<(usize, alloc::string::String)>,
}

/// One planned production: motif donor, context donor and its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedPair {
    pub g_id: usize,
    pub h_id: usize,
    pub seed: u64,
}

/// Chooses context donors for each motif donor in `donors`. Candidates are
/// restricted to `donors` (never outside the caller's split) and to graphs
/// that have contextual nodes under their own graphon, whose resolution
/// `k_of(graph id)` gives.
pub fn plan_pairs(
    ds: &LabeledDataset,
    donors: &[usize],
    k_of: &dyn Fn(usize) -> Option<usize>,
    cfg: &ProducerConfig,
    seed: u64,
) -> Vec<PlannedPair> {
    let has_context = |i: usize| k_of(i).is_some_and(|k| ds.graphs[i].n() > k);
    let mut out = Vec::new();
    let mut item = 0u64;
    for &g_id in donors {
        let pool: Vec<usize> = donors
            .iter()
            .copied()
            .filter(|&h| has_context(h))
            .filter(|&h| match cfg.pairing {
                Pairing::SameClass => ds.labels[h] == ds.labels[g_id],
                Pairing::CrossClass => ds.labels[h] != ds.labels[g_id],
            })
            .collect();
        let others: Vec<usize> = pool.iter().copied().filter(|&h| h != g_id).collect();
        let pool = if others.is_empty() { pool } else { others };
        for _ in 0..cfg.per_graph {
            let pair_seed = rng::derive_seed(seed, "pair", item);
            let mut r = rng::stream(seed, "pair-choice", item);
            item += 1;
            if let Some(&h_id) = pool.choose(&mut r) {
                out.push(PlannedPair {
                    g_id,
                    h_id,
                    seed: pair_seed,
                });
            }
        }
    }
    out
}

/// Runs [`produce_raw_counterfactual`] over planned pairs; `graphons(id)` is
/// the graphon of graph `id`.
pub fn produce_batch(
    ds: &LabeledDataset,
    pairs: &[PlannedPair],
    graphons: &dyn Fn(usize) -> Option<Graphon>,
    cfg: &ProducerConfig,
) -> BatchReport {
    let mut report = BatchReport::default();
    for p in pairs {
        match produce_pair(ds, p, graphons, cfg) {
            Ok(raw) => report.produced.push(raw),
            Err(e) => report
                .skipped
                .push((p.g_id, alloc::string::ToString::to_string(&e))),
        }
    }
    report
}

/// Produces a single planned pair.
pub fn produce_pair(
    ds: &LabeledDataset,
    p: &PlannedPair,
    graphons: &dyn Fn(usize) -> Option<Graphon>,
    cfg: &ProducerConfig,
) -> Result<RawCounterfactual> {
    let lg = ds.labels[p.g_id];
    let wg = graphons(p.g_id)
        .ok_or_else(|| Error::Producer(format!("no graphon for graph {}", p.g_id)))?;
    let wh = graphons(p.h_id)
        .ok_or_else(|| Error::Producer(format!("no graphon for graph {}", p.h_id)))?;
    let mode = match cfg.binarize {
        BinarizeMode::Stochastic { seed } => BinarizeMode::Stochastic {
            seed: rng::derive_seed(seed, "pair-mask", p.seed),
        },
        t => t,
    };
    produce_raw_counterfactual(
        &ds.graphs[p.g_id],
        &ds.graphs[p.h_id],
        &wg,
        &wh,
        cfg.eta,
        p.seed,
        mode,
        DonorIds {
            g_id: p.g_id,
            h_id: p.h_id,
            label: lg,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named::*;
    use crate::graphon::estimate_graphon;

    fn ids(g: usize, h: usize) -> DonorIds {
        DonorIds {
            g_id: g,
            h_id: h,
            label: 0,
        }
    }

    #[test]
    fn merge_without_cross_edges_is_block_diagonal() {
        let m = merge_graphs(&complete(3), &complete(2), 0, &mut rng::stream(1, "t", 0)).unwrap();
        assert_eq!(m.ap.n(), 5);
        assert_eq!(m.ap.edges(), alloc::vec![(0, 1), (0, 2), (1, 2), (3, 4)]);
    }

    #[test]
    fn merge_single_cross_edge_is_reproducible() {
        let a = merge_graphs(&complete(3), &complete(2), 1, &mut rng::stream(4, "t", 0)).unwrap();
        let b = merge_graphs(&complete(3), &complete(2), 1, &mut rng::stream(4, "t", 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cross.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(a.ap.edge_count(), 5);
        assert!(merge_graphs(&complete(3), &complete(2), 7, &mut rng::stream(4, "t", 0)).is_err());
    }

    #[test]
    fn mask_removes_motif_of_context_donor() {
        // Ŵ_H^ext equal to A_H: bottom-right block vanishes.
        let h = complete(3);
        let wh = Graphon::new(h.to_mat()).unwrap();
        let wg = Graphon::constant(2, 1.0).unwrap();
        let m = build_mask(
            &wg,
            &wh,
            &h,
            &Mat::zeros(2, 3),
            (2, 3),
            BinarizeMode::Threshold(0.5),
        )
        .unwrap();
        for i in 2..5 {
            for j in 2..5 {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
        assert_eq!(m[(0, 1)], 1.0);
    }

    #[test]
    fn mask_keeps_context_edges_and_absolute_value_is_annihilated() {
        // 4-node context donor (path 0-1-2-3), mask evaluated entry by entry.
        let h = path(4);
        let wh = Graphon::new(Mat::from_vec(2, 2, alloc::vec![0.0, 0.0, 0.0, 0.0])).unwrap();
        let wh_edge = Graphon::new(Mat::from_vec(2, 2, alloc::vec![1.0, 1.0, 1.0, 1.0])).unwrap();
        let wg = Graphon::constant(1, 1.0).unwrap();
        let ac = Mat::zeros(1, 4);
        let keep = build_mask(&wg, &wh, &h, &ac, (1, 4), BinarizeMode::Threshold(0.5)).unwrap();
        // A_H has (2,3) and the graphon misses it: 1 - 0 = 1.
        assert_eq!(keep[(3, 4)], 1.0);
        let m = build_mask(&wg, &wh_edge, &h, &ac, (1, 4), BinarizeMode::Threshold(0.5)).unwrap();
        // Graphon predicts the diagonal cell (0,0) and the edge (0,1) which H has.
        assert_eq!(m[(1, 2)], 0.0);
        // Diagonal: |0 - 1| = 1 in the mask, but A_p has no self loop.
        assert_eq!(m[(1, 1)], 1.0);
        let mut ap = Graph::empty(5);
        for (u, v) in h.edges() {
            ap.set_edge(u + 1, v + 1, true);
        }
        let out = apply_mask(&m, &ap);
        assert_eq!(out.edges(), alloc::vec![(2, 3), (3, 4)]);
    }

    fn planted(motif: &Graph, context: &Graph, cross: &[(usize, usize)]) -> Graph {
        let m = motif.n();
        let mut g = Graph::empty(m + context.n());
        for (u, v) in motif.edges() {
            g.set_edge(u, v, true);
        }
        for (u, v) in context.edges() {
            g.set_edge(m + u, m + v, true);
        }
        for &(u, v) in cross {
            g.set_edge(u, m + v, true);
        }
        g
    }

    #[test]
    fn self_recombination_keeps_both_parts() {
        let g = planted(&complete(3), &path(5), &[(0, 0), (1, 4)]);
        let w = estimate_graphon(core::slice::from_ref(&g), Some(3)).unwrap();
        let raw = produce_raw_counterfactual(
            &g,
            &g,
            &w,
            &w,
            2,
            11,
            BinarizeMode::Threshold(0.5),
            ids(0, 0),
        )
        .unwrap();
        assert!(raw.provenance.self_recombination);
        let motif: Vec<usize> = (0..3).collect();
        assert_eq!(raw.graph.induced_subgraph(&motif), complete(3));
        assert_eq!(raw.context_graph().edge_count(), 4);
        verify_decomposition(&raw, &g, &g, &w, &w, BinarizeMode::Threshold(0.5)).unwrap();
    }

    #[test]
    fn k3_motif_with_c4_context_donor() {
        let g = planted(&complete(3), &path(4), &[(0, 0)]);
        // Context donor: square motif plus a sparse tail.
        let h = planted(&cycle(4), &path(3), &[(0, 0)]);
        let wg = estimate_graphon(core::slice::from_ref(&g), Some(3)).unwrap();
        let wh = estimate_graphon(core::slice::from_ref(&h), Some(4)).unwrap();
        let raw = produce_raw_counterfactual(
            &g,
            &h,
            &wg,
            &wh,
            2,
            5,
            BinarizeMode::Threshold(0.5),
            ids(0, 1),
        )
        .unwrap();
        assert_eq!(raw.n_motif, 3);
        assert_eq!(raw.graph.induced_subgraph(&[0, 1, 2]).edge_count(), 3);
        // H context = the path tail (3 nodes, 2 edges); none of them predicted.
        assert_eq!(raw.n_context(), 3);
        assert_eq!(raw.context_graph().edge_count(), 2);
        assert!(!raw.initial_cross_edges.is_empty());
        verify_decomposition(&raw, &g, &h, &wg, &wh, BinarizeMode::Threshold(0.5)).unwrap();
    }

    #[test]
    fn zero_graphon_motif_is_rejected() {
        let g = planted(&complete(3), &path(4), &[(0, 0)]);
        let zero = Graphon::constant(3, 0.0).unwrap();
        let err = produce_raw_counterfactual(
            &g,
            &g,
            &zero,
            &zero,
            2,
            1,
            BinarizeMode::Threshold(0.5),
            ids(3, 4),
        );
        assert!(matches!(err, Err(Error::Producer(msg)) if msg.contains("motif donor")));
    }

    #[test]
    fn context_donor_without_context_is_rejected() {
        let g = planted(&complete(3), &path(4), &[(0, 0)]);
        let w = Graphon::constant(7, 1.0).unwrap();
        let err = produce_raw_counterfactual(
            &g,
            &g,
            &w,
            &w,
            2,
            1,
            BinarizeMode::Threshold(0.5),
            ids(0, 0),
        );
        assert!(matches!(err, Err(Error::Producer(msg)) if msg.contains("context donor")));
    }

    #[test]
    fn production_is_deterministic() {
        let g = planted(&complete(4), &cycle(6), &[(0, 1), (2, 3)]);
        let h = planted(&cycle(4), &path(7), &[(1, 1)]);
        let wg = estimate_graphon(core::slice::from_ref(&g), Some(4)).unwrap();
        let wh = estimate_graphon(core::slice::from_ref(&h), Some(4)).unwrap();
        let mode = BinarizeMode::Stochastic { seed: 8 };
        let a = produce_raw_counterfactual(&g, &h, &wg, &wh, 3, 21, mode, ids(0, 1)).unwrap();
        let b = produce_raw_counterfactual(&g, &h, &wg, &wh, 3, 21, mode, ids(0, 1)).unwrap();
        assert_eq!(a, b);
    }
}
