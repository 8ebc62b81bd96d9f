//! Motif-consistent counterfactual augmentation for graph-level anomaly
//! detection.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and an explicit seed: graph containers, step
//! function graphon estimation, raw counterfactual production, the
//! adversarial edge optimizer with its hand-derived gradients, the quality
//! metrics and the anomaly classifier. File formats, configuration files and
//! the command line live in the `motifcar` companion crate.
//!
//! Pipeline at a glance:
//!
//! 1. [`graphon::estimate_graphon`] per class.
//! 2. [`producer::produce_raw_counterfactual`] merges the motif of one graph
//!    with the contextual subgraph of another.
//! 3. [`optimizer::train_gan`] refines the cross edges of the raw graphs.
//! 4. [`detector::train_classifier`] learns on real plus refined graphs.
#![no_std]

extern crate alloc;

pub mod detector;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod graphon;
pub mod mat;
pub mod math;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod producer;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Graph, LabeledDataset, Split};
pub use graphon::Graphon;
pub use mat::Mat;
