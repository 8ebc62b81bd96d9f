//! Counterfactual quality scores and detection metrics.
//!
//! Realism is a squared MMD between structural feature vectors, proximity a
//! mean feature distance, sparsity an edge symmetric difference measured
//! through producer provenance, and validity the agreement of a fixed
//! reference classifier with the intended labels.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::detector::{predict, ClassifierModel};
use crate::error::{Error, Result};
use crate::graph::{Graph, Role};
use crate::math::{exp, median, sqrt};
use crate::producer::RawCounterfactual;

pub const DEFAULT_HISTOGRAM_BUCKETS: usize = 16;
/// Node count `n` enters the feature vector as `n / (n + NODE_SCALE)`.
pub const NODE_SCALE: f64 = 20.0;
/// Realism is reported as `100 · MMD²`.
pub const REALISM_SCALE: f64 = 100.0;

/// Degree histogram (fractions, last bucket open-ended), edge density, mean
/// local clustering and squashed node count.
pub fn graph_feature_vector(g: &Graph, buckets: usize) -> Vec<f64> {
    let n = g.n();
    let buckets = buckets.max(1);
    let mut v = vec![0.0; buckets + 3];
    if n == 0 {
        return v;
    }
    let deg = g.degree_sequence();
    for &d in &deg {
        v[d.min(buckets - 1)] += 1.0 / n as f64;
    }
    let pairs = n * (n - 1) / 2;
    v[buckets] = if pairs == 0 {
        0.0
    } else {
        g.edge_count() as f64 / pairs as f64
    };
    v[buckets + 1] = mean_clustering(g);
    v[buckets + 2] = n as f64 / (n as f64 + NODE_SCALE);
    v
}

/// Mean local clustering coefficient; nodes of degree < 2 count as 0.
pub fn mean_clustering(g: &Graph) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for u in 0..n {
        let nb: Vec<usize> = g.neighbors(u).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for (a, &x) in nb.iter().enumerate() {
            for &y in &nb[a + 1..] {
                if g.has_edge(x, y) {
                    links += 1;
                }
            }
        }
        total += 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    total / n as f64
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `100 · MMD²` (biased estimator) between the feature vectors of two sets
/// under a Gaussian kernel whose bandwidth is the median pairwise distance
/// of the pooled set (1 if that median is 0).
pub fn realism_score(real: &[Graph], cf: &[Graph]) -> Result<f64> {
    if real.is_empty() || cf.is_empty() {
        return Err(Error::arg("realism needs two non-empty graph sets"));
    }
    let fx: Vec<Vec<f64>> = real
        .iter()
        .map(|g| graph_feature_vector(g, DEFAULT_HISTOGRAM_BUCKETS))
        .collect();
    let fy: Vec<Vec<f64>> = cf
        .iter()
        .map(|g| graph_feature_vector(g, DEFAULT_HISTOGRAM_BUCKETS))
        .collect();
    Ok(REALISM_SCALE * mmd2(&fx, &fy))
}

/// Biased squared MMD with median-heuristic Gaussian kernel.
pub fn mmd2(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let mut dists = Vec::new();
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            dists.push(sqrt(sq_dist(pooled[i], pooled[j])));
        }
    }
    let sigma = match median(&mut dists) {
        Some(m) if m > 0.0 => m,
        _ => 1.0,
    };
    let k = |a: &[f64], b: &[f64]| exp(-sq_dist(a, b) / (2.0 * sigma * sigma));
    let mean_k = |s: &[Vec<f64>], t: &[Vec<f64>]| {
        let mut acc = 0.0;
        for a in s {
            for b in t {
                acc += k(a, b);
            }
        }
        acc / (s.len() * t.len()) as f64
    };
    (mean_k(x, x) + mean_k(y, y) - 2.0 * mean_k(x, y)).max(0.0)
}

/// Mean Euclidean feature distance between each counterfactual and its
/// motif donor.
pub fn proximity_score(pairs: &[(&Graph, &Graph)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::arg("proximity needs at least one pair"));
    }
    let total: f64 = pairs
        .iter()
        .map(|(cf, src)| {
            sqrt(sq_dist(
                &graph_feature_vector(cf, DEFAULT_HISTOGRAM_BUCKETS),
                &graph_feature_vector(src, DEFAULT_HISTOGRAM_BUCKETS),
            ))
        })
        .sum();
    Ok(total / pairs.len() as f64)
}

/// Fraction of counterfactuals the reference classifier assigns to their
/// intended label.
pub fn validity_score(cf: &[(&Graph, usize)], model: &ClassifierModel) -> Result<f64> {
    if !model.is_trained() {
        return Err(Error::Classifier(
            "validity needs a trained reference classifier".into(),
        ));
    }
    if cf.is_empty() {
        return Err(Error::arg("validity needs at least one counterfactual"));
    }
    let hits = cf
        .iter()
        .filter(|(g, label)| predict(model, g).1 == *label)
        .count();
    Ok(hits as f64 / cf.len() as f64)
}

/// A counterfactual graph laid out like its raw scaffold, with the motif
/// donor it must be compared against.
#[derive(Debug, Clone, Copy)]
pub struct SparsityPair<'a> {
    pub cf: &'a Graph,
    pub scaffold: &'a RawCounterfactual,
    pub source: &'a Graph,
}

/// Mean `|E_cf Δ E_source| / max(1, |E_source|)`. Motif nodes are mapped to
/// the donor's ids through provenance; any edge touching a context node is
/// an addition. Refuses pairs whose provenance does not fit the donor.
pub fn sparsity_score(pairs: &[SparsityPair<'_>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::arg("sparsity needs at least one pair"));
    }
    let mut total = 0.0;
    for p in pairs {
        total += edge_change(p)? as f64 / p.source.edge_count().max(1) as f64;
    }
    Ok(total / pairs.len() as f64)
}

fn edge_change(p: &SparsityPair<'_>) -> Result<usize> {
    let nodes = &p.scaffold.nodes;
    if p.cf.n() != nodes.len() {
        return Err(Error::arg(format!(
            "counterfactual has {} nodes but its provenance lists {}",
            p.cf.n(),
            nodes.len()
        )));
    }
    let src_of = |i: usize| match nodes[i].role {
        Role::Motif => Some(nodes[i].source),
        Role::Context => None,
    };
    if nodes
        .iter()
        .any(|c| c.role == Role::Motif && c.source >= p.source.n())
    {
        return Err(Error::arg(
            "provenance refers to nodes outside the motif donor",
        ));
    }
    let mut mapped = 0usize;
    let mut additions = 0usize;
    for (i, j) in p.cf.edges() {
        match (src_of(i), src_of(j)) {
            (Some(a), Some(b)) if p.source.has_edge(a, b) => mapped += 1,
            _ => additions += 1,
        }
    }
    Ok(additions + p.source.edge_count() - mapped)
}

/// Precision, recall and F1 of `positive`, with flags raised where a
/// denominator vanished (the metric is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub no_predicted_positive: bool,
    pub no_actual_positive: bool,
}

pub fn detection_metrics(
    predicted: &[usize],
    actual: &[usize],
    positive: usize,
) -> Result<Detection> {
    if predicted.len() != actual.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    let tp = predicted
        .iter()
        .zip(actual)
        .filter(|&(&p, &a)| p == positive && a == positive)
        .count();
    let pp = predicted.iter().filter(|&&p| p == positive).count();
    let ap = actual.iter().filter(|&&a| a == positive).count();
    let precision = if pp == 0 { 0.0 } else { tp as f64 / pp as f64 };
    let recall = if ap == 0 { 0.0 } else { tp as f64 / ap as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Detection {
        precision,
        recall,
        f1,
        no_predicted_positive: pp == 0,
        no_actual_positive: ap == 0,
    })
}

/// Quality and detection scores of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub dataset: String,
    pub seed: u64,
    /// FNV-1a hash of the resolved configuration text.
    pub config_hash: String,
    pub augmentation: bool,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Quality scores are absent when no counterfactuals were produced.
    pub realism: Option<f64>,
    pub validity: Option<f64>,
    pub proximity: Option<f64>,
    pub sparsity: Option<f64>,
    pub counterfactuals: usize,
    pub skipped_pairs: usize,
}

impl MetricsReport {
    /// Fractions in `[0, 1]` and every score finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::arg(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if let Some(v) = self.validity {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::arg(format!("validity = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("realism", self.realism),
            ("proximity", self.proximity),
            ("sparsity", self.sparsity),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::arg(format!(
                        "{name} = {v} is not a finite non-negative score"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;
    use crate::producer::{CfNode, Provenance};

    #[test]
    fn feature_vector_examples() {
        let b = DEFAULT_HISTOGRAM_BUCKETS;
        let k3 = graph_feature_vector(&named::complete(3), b);
        assert_eq!(k3[2], 1.0);
        assert_eq!(k3[b], 1.0);
        assert_eq!(k3[b + 1], 1.0);
        let e5 = graph_feature_vector(&Graph::empty(5), b);
        assert_eq!(e5[0], 1.0);
        assert!(e5[1..b].iter().all(|&x| x == 0.0));
        assert_eq!(e5[b], 0.0);
        assert_eq!(mean_clustering(&named::cycle(5)), 0.0);
        assert_eq!(k3.len(), b + 3);
    }

    #[test]
    fn clustering_of_a_triangle_with_pendant() {
        // Node 0: neighbors 1,2,3 with one link → 1/3; nodes 1,2 → 1; node 3 → 0.
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (0, 3)]).unwrap();
        assert!((mean_clustering(&g) - (1.0 / 3.0 + 2.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn realism_of_identical_sets_is_zero() {
        let s = vec![named::cycle(5), named::complete(4), named::path(6)];
        assert_eq!(realism_score(&s, &s).unwrap(), 0.0);
        let shuffled = vec![s[2].clone(), s[0].clone(), s[1].clone()];
        assert!(realism_score(&s, &shuffled).unwrap().abs() < 1e-12);
        let t = vec![named::star(5, 0)];
        let a = realism_score(&s, &t).unwrap();
        let b = realism_score(&t, &s).unwrap();
        assert!((a - b).abs() < 1e-12 && a > 0.0);
        assert!(realism_score(&[], &t).is_err());
    }

    #[test]
    fn proximity_examples() {
        let k3 = named::complete(3);
        assert_eq!(proximity_score(&[(&k3, &k3)]).unwrap(), 0.0);
        // Only the density entry differs: 1.0 vs 0.5.
        let v1 = graph_feature_vector(&k3, DEFAULT_HISTOGRAM_BUCKETS);
        let mut v2 = v1.clone();
        v2[DEFAULT_HISTOGRAM_BUCKETS] = 0.5;
        assert!((sqrt(sq_dist(&v1, &v2)) - 0.5).abs() < 1e-12);
    }

    fn scaffold_over(n_motif: usize, n_ctx: usize) -> RawCounterfactual {
        let n = n_motif + n_ctx;
        RawCounterfactual {
            nodes: (0..n)
                .map(|i| CfNode {
                    role: if i < n_motif {
                        Role::Motif
                    } else {
                        Role::Context
                    },
                    source: i,
                })
                .collect(),
            graph: Graph::empty(n),
            n_motif,
            cross_candidates: Vec::new(),
            initial_cross_edges: Vec::new(),
            provenance: Provenance {
                g_id: 0,
                h_id: 0,
                label: 0,
                seed: 0,
                self_recombination: true,
                resampled_cross: false,
            },
        }
    }

    #[test]
    fn sparsity_examples() {
        // 10-edge source on 7 nodes, all nodes motif nodes.
        let src = Graph::from_edges(
            7,
            &[
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (0, 6),
                (0, 2),
                (1, 3),
                (2, 4),
            ],
        )
        .unwrap();
        let sc = scaffold_over(7, 0);
        assert_eq!(
            sparsity_score(&[SparsityPair {
                cf: &src,
                scaffold: &sc,
                source: &src
            }])
            .unwrap(),
            0.0
        );
        let mut plus2 = src.clone();
        plus2.set_edge(0, 3, true);
        plus2.set_edge(0, 4, true);
        let s = sparsity_score(&[SparsityPair {
            cf: &plus2,
            scaffold: &sc,
            source: &src,
        }])
        .unwrap();
        assert!((s - 0.2).abs() < 1e-12);
        // Disjoint edge set of equal size.
        let mut other = Graph::empty(7);
        let mut added = 0;
        for u in 0..7 {
            for v in (u + 1)..7 {
                if added < 10 && !src.has_edge(u, v) {
                    other.set_edge(u, v, true);
                    added += 1;
                }
            }
        }
        let s = sparsity_score(&[SparsityPair {
            cf: &other,
            scaffold: &sc,
            source: &src,
        }])
        .unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sparsity_counts_context_edges_as_additions() {
        let src = named::complete(3);
        let sc = scaffold_over(3, 2);
        let mut cf = Graph::empty(5);
        for (u, v) in src.edges() {
            cf.set_edge(u, v, true);
        }
        cf.set_edge(0, 3, true);
        cf.set_edge(3, 4, true);
        let s = sparsity_score(&[SparsityPair {
            cf: &cf,
            scaffold: &sc,
            source: &src,
        }])
        .unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
        let wrong = Graph::empty(4);
        assert!(sparsity_score(&[SparsityPair {
            cf: &wrong,
            scaffold: &sc,
            source: &src
        }])
        .is_err());
    }

    #[test]
    fn detection_examples() {
        let d = detection_metrics(&[1, 0, 1], &[1, 0, 1], 1).unwrap();
        assert_eq!((d.precision, d.recall, d.f1), (1.0, 1.0, 1.0));
        let d = detection_metrics(&[1, 1, 1, 1], &[1, 1, 0, 0], 1).unwrap();
        assert_eq!((d.precision, d.recall), (0.5, 1.0));
        assert!((d.f1 - 2.0 / 3.0).abs() < 1e-12);
        let d = detection_metrics(&[0, 0], &[0, 0], 1).unwrap();
        assert!(d.no_predicted_positive && d.no_actual_positive && d.f1 == 0.0);
        assert!(detection_metrics(&[1], &[1, 0], 1).is_err());
    }
}
