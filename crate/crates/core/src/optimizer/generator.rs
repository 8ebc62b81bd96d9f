//! Edge generator: learnable logits over the scaffold edges and the
//! motif × context candidates, relaxed as `P = σ((𝒲 − X) / τ)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::align_nodes;
use crate::mat::Mat;
use crate::math::sigmoid;
use crate::producer::RawCounterfactual;
use crate::rng;

/// Node similarity used to scale the candidate logits at initialization.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Similarity {
    /// `1 / (1 + |deg(i) − deg(j)|)` on the scaffold degrees.
    #[default]
    Degree,
    /// Caller-supplied `n × n` matrix (e.g. embedding cosine similarity).
    Custom(Mat),
}

impl Similarity {
    fn matrix(&self, scaffold: &Graph) -> Result<Mat> {
        let n = scaffold.n();
        match self {
            Similarity::Degree => {
                let d = scaffold.degree_sequence();
                Ok(Mat::from_fn(n, n, |i, j| {
                    1.0 / (1.0 + d[i].abs_diff(d[j]) as f64)
                }))
            }
            Similarity::Custom(s) if s.rows() == n && s.cols() == n => Ok(s.clone()),
            Similarity::Custom(s) => Err(Error::arg(format!(
                "similarity matrix is {}x{}, expected {n}x{n}",
                s.rows(),
                s.cols()
            ))),
        }
    }
}

/// Learnable logits of one counterfactual and its frozen scaffold.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorState {
    /// Symmetric; zero outside the trainable pairs.
    pub logits: Mat,
    /// Trainable pairs `(i, j)`, `i < j`: scaffold edges, then candidates.
    pub trainable: Vec<(usize, usize)>,
    pub tau_g: f64,
    pub lambda_g: f64,
    /// Connection-edge count of the realistic graph being imitated.
    pub e_con_real: usize,
    pub scaffold: RawCounterfactual,
    /// Degree alignment of the scaffold, frozen for the motif loss.
    pub alignment: Vec<usize>,
}

/// Builds the initial logits: 1 on scaffold edges,
/// `γ λ_g |E_con| S_ij / |C|` on candidates, 0 elsewhere.
pub fn init_edge_logits(
    raw: &RawCounterfactual,
    gamma: f64,
    lambda_g: f64,
    e_con_real: usize,
    tau_g: f64,
    similarity: &Similarity,
) -> Result<GeneratorState> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!(
            "initialization rate {gamma} not in [0, 1]"
        )));
    }
    if !(tau_g > 0.0 && tau_g <= 1.0) {
        return Err(Error::config(format!("tau_g = {tau_g} not in (0, 1]")));
    }
    if lambda_g < 0.0 {
        return Err(Error::config("lambda_g must be non-negative"));
    }
    let c = raw.cross_candidates.len();
    if c == 0 {
        return Err(Error::Init(
            "scaffold has no motif-context candidate pairs".into(),
        ));
    }
    let n = raw.n();
    let s = similarity.matrix(&raw.graph)?;
    let mut logits = Mat::zeros(n, n);
    let mut trainable = raw.scaffold_edges();
    for &(i, j) in &trainable {
        logits[(i, j)] = 1.0;
        logits[(j, i)] = 1.0;
    }
    let scale = gamma * lambda_g * e_con_real as f64 / c as f64;
    for &(i, j) in &raw.cross_candidates {
        let v = scale * s[(i, j)];
        logits[(i, j)] = v;
        logits[(j, i)] = v;
        trainable.push((i, j));
    }
    Ok(GeneratorState {
        logits,
        trainable,
        tau_g,
        lambda_g,
        e_con_real,
        scaffold: raw.clone(),
        alignment: align_nodes(&raw.graph),
    })
}

impl GeneratorState {
    pub fn n(&self) -> usize {
        self.logits.rows()
    }

    /// Draws `X ~ U(0,1)` on the upper triangle (mirrored).
    pub fn sample_noise(&self, rng: &mut rng::Rng) -> Mat {
        let n = self.n();
        let mut x = Mat::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let u: f64 = rng.random();
                x[(i, j)] = u;
                x[(j, i)] = u;
            }
        }
        x
    }

    /// `P = σ((𝒲 − X)/τ)` on trainable pairs, exactly 0 elsewhere.
    pub fn relax_with(&self, x: &Mat) -> Mat {
        let n = self.n();
        let mut p = Mat::zeros(n, n);
        for &(i, j) in &self.trainable {
            let v = sigmoid((self.logits[(i, j)] - x[(i, j)]) / self.tau_g);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
        p
    }

    /// Chains `∂L/∂P` (entries independent) onto the trainable logits, in
    /// the order of [`GeneratorState::trainable`].
    pub fn logit_grad(&self, p: &Mat, d_p: &Mat) -> Vec<f64> {
        self.trainable
            .iter()
            .map(|&(i, j)| {
                let v = p[(i, j)];
                (d_p[(i, j)] + d_p[(j, i)]) * v * (1.0 - v) / self.tau_g
            })
            .collect()
    }

    pub fn trainable_values(&self) -> Vec<f64> {
        self.trainable
            .iter()
            .map(|&(i, j)| self.logits[(i, j)])
            .collect()
    }

    pub fn set_trainable_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.trainable.len());
        for (&(i, j), &v) in self.trainable.iter().zip(values) {
            self.logits[(i, j)] = v;
            self.logits[(j, i)] = v;
        }
    }

    /// Graph with an edge wherever `P ≥ 0.5`.
    pub fn extract_with(&self, x: &Mat) -> Graph {
        threshold(&self.relax_with(x))
    }

    /// Cross-edge count of a graph over this scaffold's node layout.
    pub fn cross_edges(&self, g: &Graph) -> usize {
        self.scaffold
            .cross_candidates
            .iter()
            .filter(|&&(i, j)| g.has_edge(i, j))
            .count()
    }
}

/// Relaxes with fresh noise.
pub fn relax_edges(state: &GeneratorState, rng: &mut rng::Rng) -> Mat {
    state.relax_with(&state.sample_noise(rng))
}

/// 0/1 graph from a relaxed matrix thresholded at 0.5.
pub fn threshold(p: &Mat) -> Graph {
    let n = p.rows();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if p[(i, j)] >= 0.5 {
                g.set_edge(i, j, true);
            }
        }
    }
    g
}
