//! Planted-motif datasets with known ground-truth node roles.
//!
//! Each graph is its class motif, an Erdős–Rényi context and exactly
//! `cross_edge_count` motif↔context edges, with node ids shuffled.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{named, Graph, LabeledDataset, Role, Split};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedClass {
    pub motif: Graph,
    /// Inclusive range of context node counts.
    pub context_nodes: (usize, usize),
    pub context_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedMotifConfig {
    pub classes: Vec<PlantedClass>,
    pub graphs_per_class: usize,
    pub cross_edge_count: usize,
    pub seed: u64,
}

impl PlantedMotifConfig {
    /// Two classes of ~15-node graphs: class 0 carries a K4 motif, class 1 a
    /// 4-cycle, both over the same sparse context distribution.
    pub fn desk_fixture(graphs_per_class: usize, seed: u64) -> Self {
        PlantedMotifConfig {
            classes: alloc::vec![
                PlantedClass {
                    motif: named::complete(4),
                    context_nodes: (9, 13),
                    context_p: 0.1
                },
                PlantedClass {
                    motif: named::cycle(4),
                    context_nodes: (9, 13),
                    context_p: 0.1
                },
            ],
            graphs_per_class,
            cross_edge_count: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::config("no classes"));
        }
        for (c, class) in self.classes.iter().enumerate() {
            let (lo, hi) = class.context_nodes;
            if lo > hi {
                return Err(Error::config(format!(
                    "class {c}: empty context node-count range [{lo}, {hi}]"
                )));
            }
            if !(0.0..=1.0).contains(&class.context_p) {
                return Err(Error::config(format!(
                    "class {c}: context probability {} not in [0, 1]",
                    class.context_p
                )));
            }
            if class.motif.is_empty() {
                return Err(Error::config(format!("class {c}: empty motif")));
            }
            if self.cross_edge_count > class.motif.n() * lo {
                return Err(Error::config(format!(
                    "class {c}: {} cross edges exceed the {} available motif-context pairs",
                    self.cross_edge_count,
                    class.motif.n() * lo
                )));
            }
        }
        Ok(())
    }
}

/// Generates the dataset; labels are class indices, class 0 is the
/// designated anomaly class and every graph is in the train split.
pub fn generate_planted_motif_dataset(cfg: &PlantedMotifConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    let mut roles = Vec::new();
    for (c, class) in cfg.classes.iter().enumerate() {
        for k in 0..cfg.graphs_per_class {
            let idx = (c * cfg.graphs_per_class + k) as u64;
            let mut rng = rng::stream(cfg.seed, "synth", idx);
            let (g, r) = planted_graph(class, cfg.cross_edge_count, &mut rng);
            graphs.push(g);
            labels.push(c);
            roles.push(r);
        }
    }
    let n = graphs.len();
    let mut ds = LabeledDataset::new("planted", graphs, labels, 0, Split::all_train(n))?;
    ds.roles = Some(roles);
    ds.validate()?;
    Ok(ds)
}

fn planted_graph(class: &PlantedClass, cross: usize, rng: &mut rng::Rng) -> (Graph, Vec<Role>) {
    let m = class.motif.n();
    let (lo, hi) = class.context_nodes;
    let c = rng.random_range(lo..=hi);
    let n = m + c;
    // Build in the canonical layout (motif first), then shuffle ids.
    let mut g = Graph::empty(n);
    for (u, v) in class.motif.edges() {
        g.set_edge(u, v, true);
    }
    for u in m..n {
        for v in (u + 1)..n {
            if rng.random_bool(class.context_p) {
                g.set_edge(u, v, true);
            }
        }
    }
    for pair in index::sample(rng, m * c, cross) {
        g.set_edge(pair / c, m + pair % c, true);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let roles = order
        .iter()
        .map(|&old| if old < m { Role::Motif } else { Role::Context })
        .collect();
    (g.permuted(&order), roles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::homomorphism_density;

    fn triangle_cfg() -> PlantedMotifConfig {
        PlantedMotifConfig {
            classes: alloc::vec![PlantedClass {
                motif: named::complete(3),
                context_nodes: (5, 5),
                context_p: 0.1
            }],
            graphs_per_class: 10,
            cross_edge_count: 2,
            seed: 7,
        }
    }

    #[test]
    fn every_graph_contains_its_motif() {
        let ds = generate_planted_motif_dataset(&triangle_cfg()).unwrap();
        assert_eq!(ds.len(), 10);
        for g in &ds.graphs {
            assert_eq!(g.n(), 8);
            assert!(homomorphism_density(&named::complete(3), g).unwrap() > 0.0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_planted_motif_dataset(&triangle_cfg()).unwrap();
        let b = generate_planted_motif_dataset(&triangle_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn roles_and_cross_edges_match_construction() {
        let ds = generate_planted_motif_dataset(&triangle_cfg()).unwrap();
        let roles = ds.roles.as_ref().unwrap();
        for (g, r) in ds.graphs.iter().zip(roles) {
            let motif: Vec<usize> = (0..g.n()).filter(|&u| r[u] == Role::Motif).collect();
            assert_eq!(motif.len(), 3);
            assert_eq!(g.induced_subgraph(&motif).edge_count(), 3);
            let cross = g.edges().iter().filter(|(u, v)| r[*u] != r[*v]).count();
            assert_eq!(cross, 2);
        }
    }

    #[test]
    fn empty_context_range_is_rejected() {
        let mut cfg = triangle_cfg();
        cfg.classes[0].context_nodes = (6, 4);
        assert!(matches!(
            generate_planted_motif_dataset(&cfg),
            Err(Error::Config(_))
        ));
    }
}
