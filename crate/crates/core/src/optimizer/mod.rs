//! Adversarial refinement of raw counterfactuals.
//!
//! The generator owns one logit matrix per counterfactual; the
//! discriminator is a GCN classifier of real versus generated graphs. All
//! gradients are analytic and checked against finite differences in
//! [`crate::gradcheck`].

pub mod adam;
pub mod generator;
pub mod gnn;
pub mod losses;
pub mod train;

pub use adam::Adam;
pub use generator::{init_edge_logits, relax_edges, GeneratorState, Similarity};
pub use gnn::{
    discriminator_prob, encode_graph, graph_representation, Architecture, DiscriminatorParams,
};
pub use losses::{
    connection_loss, contextual_loss, degree_entropy, discriminator_loss, generator_loss,
    motif_consistency_loss, regularization_loss, RegSign, RegWeights,
};
pub use train::{train_gan, GanOutcome, RefineTarget, TraceRow, TrainConfig};
