//! Graph discriminator: two-layer GCN encoder over a (possibly weighted)
//! adjacency, mean ⊕ max pooling and an MLP head with a sigmoid output.
//!
//! Forward passes keep a [`Tape`] so [`backward`] can return gradients for
//! every parameter and for the adjacency entries, which is how generator
//! gradients reach the relaxed edge matrix.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::math::{self, relu, sigmoid};
use crate::rng;

/// Fully connected layer `x W + b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dense {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

impl Dense {
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut rng::Rng) -> Self {
        let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        let weight = Mat::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit));
        Dense {
            weight,
            bias: vec![0.0; fan_out],
        }
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Mat::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn zeros_like(&self) -> Self {
        Dense::zeros(self.weight.rows(), self.weight.cols())
    }

    fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Encoder `f` (GCN layers) and head `h` (MLP layers, last one scalar).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscriminatorParams {
    pub gnn_layers: Vec<Dense>,
    pub mlp_layers: Vec<Dense>,
    pub hidden_dim: usize,
}

/// Architecture knobs shared by the discriminator and the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Architecture {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub gnn_layers: usize,
    pub mlp_layers: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            in_dim: crate::graph::DEFAULT_DEGREE_BUCKETS,
            hidden_dim: 32,
            gnn_layers: 2,
            mlp_layers: 2,
        }
    }
}

impl DiscriminatorParams {
    /// Glorot-uniform weights, zero biases and a zero output layer, so a
    /// fresh model answers `0.5` for every graph.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        if arch.in_dim == 0 || arch.hidden_dim == 0 || arch.gnn_layers == 0 || arch.mlp_layers == 0
        {
            return Err(Error::config(
                "architecture dimensions and layer counts must be >= 1",
            ));
        }
        let mut rng = rng::stream(seed, "discriminator-init", 0);
        let h = arch.hidden_dim;
        let mut gnn_layers = Vec::with_capacity(arch.gnn_layers);
        for l in 0..arch.gnn_layers {
            gnn_layers.push(Dense::glorot(
                if l == 0 { arch.in_dim } else { h },
                h,
                &mut rng,
            ));
        }
        let mut mlp_layers = Vec::with_capacity(arch.mlp_layers);
        for t in 0..arch.mlp_layers {
            let fan_in = if t == 0 { 2 * h } else { h };
            if t + 1 == arch.mlp_layers {
                mlp_layers.push(Dense::zeros(fan_in, 1));
            } else {
                mlp_layers.push(Dense::glorot(fan_in, h, &mut rng));
            }
        }
        let p = DiscriminatorParams {
            gnn_layers,
            mlp_layers,
            hidden_dim: h,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_dim;
        if self.gnn_layers.is_empty() || self.mlp_layers.is_empty() {
            return Err(Error::config(
                "discriminator needs at least one GNN and one MLP layer",
            ));
        }
        for (l, layer) in self.gnn_layers.iter().enumerate() {
            if layer.out_dim() != h || (l > 0 && layer.in_dim() != h) || layer.bias.len() != h {
                return Err(Error::config("GNN layer dimensions do not chain"));
            }
        }
        let mut expect = 2 * h;
        for (t, layer) in self.mlp_layers.iter().enumerate() {
            if layer.in_dim() != expect || layer.bias.len() != layer.out_dim() {
                return Err(Error::config("MLP layer dimensions do not chain"));
            }
            expect = layer.out_dim();
            if t + 1 == self.mlp_layers.len() && expect != 1 {
                return Err(Error::config("MLP output must be scalar"));
            }
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.gnn_layers[0].in_dim()
    }

    pub fn zeros_like(&self) -> Self {
        DiscriminatorParams {
            gnn_layers: self.gnn_layers.iter().map(Dense::zeros_like).collect(),
            mlp_layers: self.mlp_layers.iter().map(Dense::zeros_like).collect(),
            hidden_dim: self.hidden_dim,
        }
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.gnn_layers.iter().chain(&self.mlp_layers)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.gnn_layers.iter_mut().chain(&mut self.mlp_layers)
    }

    /// All parameters in a fixed order (weights then bias, layer by layer).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in self.layers() {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`DiscriminatorParams::to_flat`]. Panics on a length mismatch.
    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for l in self.layers_mut() {
            let w = l.weight.as_mut_slice();
            w.copy_from_slice(&flat[at..at + w.len()]);
            at += w.len();
            let b = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + b]);
            at += b;
        }
        assert_eq!(at, flat.len(), "flat parameter length mismatch");
    }

    pub fn num_params(&self) -> usize {
        self.layers()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn add_scaled(&mut self, other: &DiscriminatorParams, s: f64) {
        let mut flat = self.to_flat();
        for (a, b) in flat.iter_mut().zip(other.to_flat()) {
            *a += s * b;
        }
        self.assign_flat(&flat);
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` with `D` the row sums of `A + I`, plus the
/// scaling vector `s = diag(D^{-1/2})`.
pub fn normalized_adjacency(a: &Mat) -> (Mat, Vec<f64>) {
    let n = a.rows();
    let s: Vec<f64> = (0..n)
        .map(|i| 1.0 / math::sqrt(1.0 + a.row(i).iter().sum::<f64>()))
        .collect();
    let hat = Mat::from_fn(n, n, |i, j| {
        (a[(i, j)] + if i == j { 1.0 } else { 0.0 }) * s[i] * s[j]
    });
    (hat, s)
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pub(crate) a: Mat,
    pub(crate) a_hat: Mat,
    pub(crate) s: Vec<f64>,
    /// Layer inputs `H_l` (H_0 = features).
    pub(crate) h_in: Vec<Mat>,
    /// `Â H_l`.
    pub(crate) ah: Vec<Mat>,
    /// Pre-activations `Â H_l W_l + b_l`.
    pub(crate) pre: Vec<Mat>,
    pub embeddings: Mat,
    pub(crate) argmax: Vec<usize>,
    pub representation: Vec<f64>,
    pub(crate) mlp_in: Vec<Vec<f64>>,
    pub(crate) mlp_pre: Vec<Vec<f64>>,
    pub logit: f64,
    pub prob: f64,
}

/// Node embeddings `Z^L` of the encoder.
pub fn encode_graph(a: &Mat, features: &Mat, params: &DiscriminatorParams) -> Mat {
    encode_with_tape(a, features, params).embeddings
}

/// Mean pooling concatenated with elementwise max pooling.
pub fn graph_representation(z: &Mat) -> Vec<f64> {
    pool(z).0
}

fn pool(z: &Mat) -> (Vec<f64>, Vec<usize>) {
    let (n, d) = (z.rows(), z.cols());
    assert!(n >= 1, "pooling needs at least one node");
    let mut rep = vec![0.0; 2 * d];
    let mut argmax = vec![0usize; d];
    for c in 0..d {
        let mut best = z[(0, c)];
        for i in 0..n {
            rep[c] += z[(i, c)];
            if z[(i, c)] > best {
                best = z[(i, c)];
                argmax[c] = i;
            }
        }
        rep[c] /= n as f64;
        rep[d + c] = best;
    }
    (rep, argmax)
}

fn encode_with_tape(a: &Mat, features: &Mat, params: &DiscriminatorParams) -> Tape {
    assert_eq!(a.rows(), features.rows(), "adjacency/feature row mismatch");
    assert_eq!(features.cols(), params.in_dim(), "feature width mismatch");
    let (a_hat, s) = normalized_adjacency(a);
    let mut h = features.clone();
    let mut h_in = Vec::new();
    let mut ah_all = Vec::new();
    let mut pre_all = Vec::new();
    for layer in &params.gnn_layers {
        let ah = a_hat.matmul(&h);
        let mut pre = ah.matmul(&layer.weight);
        pre.add_row_vector(&layer.bias);
        let next = pre.map(relu);
        h_in.push(h);
        ah_all.push(ah);
        pre_all.push(pre);
        h = next;
    }
    Tape {
        a: a.clone(),
        a_hat,
        s,
        h_in,
        ah: ah_all,
        pre: pre_all,
        embeddings: h,
        argmax: Vec::new(),
        representation: Vec::new(),
        mlp_in: Vec::new(),
        mlp_pre: Vec::new(),
        logit: 0.0,
        prob: 0.5,
    }
}

fn head_forward(
    rep: &[f64],
    params: &DiscriminatorParams,
    mlp_in: &mut Vec<Vec<f64>>,
    mlp_pre: &mut Vec<Vec<f64>>,
) -> f64 {
    let mut u = rep.to_vec();
    let last = params.mlp_layers.len() - 1;
    for (t, layer) in params.mlp_layers.iter().enumerate() {
        let mut q = layer.bias.clone();
        for (k, uk) in u.iter().enumerate() {
            if *uk == 0.0 {
                continue;
            }
            for (qj, w) in q.iter_mut().zip(layer.weight.row(k)) {
                *qj += uk * w;
            }
        }
        mlp_in.push(u);
        u = if t == last {
            q.clone()
        } else {
            q.iter().map(|&x| relu(x)).collect()
        };
        mlp_pre.push(q);
    }
    u[0]
}

/// Pre-sigmoid output of the head.
pub fn head_logit(rep: &[f64], params: &DiscriminatorParams) -> f64 {
    head_forward(rep, params, &mut Vec::new(), &mut Vec::new())
}

/// `p = h(z_G)`: MLP with relu hidden layers and a sigmoid output.
pub fn discriminator_prob(rep: &[f64], params: &DiscriminatorParams) -> f64 {
    sigmoid(head_logit(rep, params))
}

/// Full forward pass keeping intermediates.
pub fn forward(a: &Mat, features: &Mat, params: &DiscriminatorParams) -> Tape {
    let mut tape = encode_with_tape(a, features, params);
    let (rep, argmax) = pool(&tape.embeddings);
    let mut mlp_in = Vec::new();
    let mut mlp_pre = Vec::new();
    let logit = head_forward(&rep, params, &mut mlp_in, &mut mlp_pre);
    tape.argmax = argmax;
    tape.representation = rep;
    tape.mlp_in = mlp_in;
    tape.mlp_pre = mlp_pre;
    tape.logit = logit;
    tape.prob = sigmoid(logit);
    tape
}

/// Head-only tape for a given representation; encoder fields are empty, so
/// only [`backward_head`] may be applied to it.
pub fn head_tape(rep: &[f64], params: &DiscriminatorParams) -> Tape {
    let mut mlp_in = Vec::new();
    let mut mlp_pre = Vec::new();
    let logit = head_forward(rep, params, &mut mlp_in, &mut mlp_pre);
    Tape {
        a: Mat::zeros(0, 0),
        a_hat: Mat::zeros(0, 0),
        s: Vec::new(),
        h_in: Vec::new(),
        ah: Vec::new(),
        pre: Vec::new(),
        embeddings: Mat::zeros(0, 0),
        argmax: Vec::new(),
        representation: rep.to_vec(),
        mlp_in,
        mlp_pre,
        logit,
        prob: sigmoid(logit),
    }
}

/// Probability for a graph given as adjacency plus features.
pub fn predict_prob(a: &Mat, features: &Mat, params: &DiscriminatorParams) -> f64 {
    forward(a, features, params).prob
}

/// Gradients of a scalar loss given `d_logit = ∂L/∂logit`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: DiscriminatorParams,
    /// `∂L/∂A_ij`, entries treated as independent (degrees are row sums).
    pub adjacency: Mat,
    pub representation: Vec<f64>,
}

/// Reverse pass through head, pooling, encoder and normalization.
pub fn backward(tape: &Tape, params: &DiscriminatorParams, d_logit: f64) -> Gradients {
    let mut grads = params.zeros_like();
    let d_rep = backward_head(tape, params, d_logit, &mut grads);
    let dz = backward_pool(tape, &d_rep);
    let adjacency = backward_encoder(tape, params, &dz, &mut grads);
    Gradients {
        params: grads,
        adjacency,
        representation: d_rep,
    }
}

/// MLP head: accumulates head parameter gradients, returns `∂L/∂z_G`.
pub fn backward_head(
    tape: &Tape,
    params: &DiscriminatorParams,
    d_logit: f64,
    grads: &mut DiscriminatorParams,
) -> Vec<f64> {
    let mut du = vec![d_logit];
    for t in (0..params.mlp_layers.len()).rev() {
        let layer = &params.mlp_layers[t];
        let is_last = t + 1 == params.mlp_layers.len();
        let dq: Vec<f64> = if is_last {
            du.clone()
        } else {
            du.iter()
                .zip(&tape.mlp_pre[t])
                .map(|(d, q)| if *q > 0.0 { *d } else { 0.0 })
                .collect()
        };
        let input = &tape.mlp_in[t];
        let g = &mut grads.mlp_layers[t];
        for (k, uk) in input.iter().enumerate() {
            for (j, dqj) in dq.iter().enumerate() {
                g.weight[(k, j)] += uk * dqj;
            }
        }
        for (b, dqj) in g.bias.iter_mut().zip(&dq) {
            *b += dqj;
        }
        du = (0..layer.in_dim())
            .map(|k| {
                layer
                    .weight
                    .row(k)
                    .iter()
                    .zip(&dq)
                    .map(|(w, d)| w * d)
                    .sum()
            })
            .collect();
    }
    du
}

/// Mean ⊕ max pooling: `∂L/∂z_G` to `∂L/∂Z`.
pub fn backward_pool(tape: &Tape, d_rep: &[f64]) -> Mat {
    pool_grad(&tape.embeddings, &tape.argmax, d_rep)
}

/// Pooling gradient for a standalone embedding matrix.
pub fn graph_representation_grad(z: &Mat, d_rep: &[f64]) -> Mat {
    pool_grad(z, &pool(z).1, d_rep)
}

fn pool_grad(z: &Mat, argmax: &[usize], d_rep: &[f64]) -> Mat {
    let (n, d) = (z.rows(), z.cols());
    let mut dz = Mat::zeros(n, d);
    for c in 0..d {
        let m = d_rep[c] / n as f64;
        for i in 0..n {
            dz[(i, c)] += m;
        }
        dz[(argmax[c], c)] += d_rep[d + c];
    }
    dz
}

/// Encoder and normalization: accumulates GNN parameter gradients from
/// `∂L/∂Z`, returns `∂L/∂A` with entries treated as independent.
pub fn backward_encoder(
    tape: &Tape,
    params: &DiscriminatorParams,
    dz: &Mat,
    grads: &mut DiscriminatorParams,
) -> Mat {
    let (n, d) = (dz.rows(), dz.cols());
    let mut dh = dz.clone();
    let mut d_ahat = Mat::zeros(n, n);
    for l in (0..params.gnn_layers.len()).rev() {
        let layer = &params.gnn_layers[l];
        let pre = &tape.pre[l];
        let dm = Mat::from_fn(
            n,
            d,
            |i, c| if pre[(i, c)] > 0.0 { dh[(i, c)] } else { 0.0 },
        );
        let g = &mut grads.gnn_layers[l];
        g.weight.add_assign(&tape.ah[l].t_matmul(&dm));
        for (b, s) in g.bias.iter_mut().zip(dm.col_sums()) {
            *b += s;
        }
        let d_ah = dm.matmul_t(&layer.weight);
        d_ahat.add_assign(&d_ah.matmul_t(&tape.h_in[l]));
        dh = tape.a_hat.t_matmul(&d_ah);
    }

    // Â_ij = (A + I)_ij s_i s_j, s_i = (1 + Σ_k A_ik)^{-1/2}.
    let s = &tape.s;
    let a = &tape.a;
    let with_self = |i: usize, k: usize| a[(i, k)] + if i == k { 1.0 } else { 0.0 };
    let d_deg: Vec<f64> = (0..n)
        .map(|i| {
            let ds: f64 = (0..n)
                .map(|k| {
                    (d_ahat[(i, k)] * with_self(i, k) + d_ahat[(k, i)] * with_self(k, i)) * s[k]
                })
                .sum();
            -0.5 * s[i] * s[i] * s[i] * ds
        })
        .collect();
    Mat::from_fn(n, n, |i, j| d_ahat[(i, j)] * s[i] * s[j] + d_deg[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;

    fn small_params(in_dim: usize, seed: u64) -> DiscriminatorParams {
        let arch = Architecture {
            in_dim,
            hidden_dim: 4,
            gnn_layers: 2,
            mlp_layers: 2,
        };
        let mut p = DiscriminatorParams::init(arch, seed).unwrap();
        // Non-zero output layer so the head is not trivially flat.
        let mut r = rng::stream(seed, "test", 1);
        for w in p.mlp_layers[1].weight.as_mut_slice() {
            *w = r.random_range(-1.0..1.0);
        }
        p
    }

    #[test]
    fn zero_adjacency_gives_per_node_transform() {
        let arch = Architecture {
            in_dim: 3,
            hidden_dim: 3,
            gnn_layers: 2,
            mlp_layers: 1,
        };
        let mut p = DiscriminatorParams::init(arch, 1).unwrap();
        for layer in &mut p.gnn_layers {
            layer.weight = Mat::identity(3);
        }
        let x = Mat::from_vec(2, 3, vec![1.0, 0.0, 2.0, 0.5, 3.0, 0.0]);
        let z = encode_graph(&Mat::zeros(2, 2), &x, &p);
        assert_eq!(z, x);
    }

    #[test]
    fn encoder_shape() {
        let p = small_params(5, 2);
        let z = encode_graph(&named::cycle(7).to_mat(), &Mat::filled(7, 5, 0.3), &p);
        assert_eq!((z.rows(), z.cols()), (7, 4));
    }

    #[test]
    fn pooling_examples() {
        let z = Mat::from_vec(2, 2, vec![1.0, 3.0, 5.0, -1.0]);
        assert_eq!(graph_representation(&z), vec![3.0, 1.0, 5.0, 3.0]);
        let single = Mat::from_vec(1, 2, vec![0.4, -2.0]);
        assert_eq!(graph_representation(&single), vec![0.4, -2.0, 0.4, -2.0]);
    }

    #[test]
    fn zero_head_is_one_half() {
        let p = DiscriminatorParams::init(
            Architecture {
                in_dim: 2,
                hidden_dim: 3,
                gnn_layers: 1,
                mlp_layers: 2,
            },
            0,
        )
        .unwrap();
        assert_eq!(discriminator_prob(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &p), 0.5);
        let mut big = p.clone();
        big.mlp_layers[1].bias[0] = 50.0;
        assert!(discriminator_prob(&[0.0; 6], &big) > 1.0 - 1e-12);
    }

    #[test]
    fn encoder_is_permutation_equivariant() {
        let p = small_params(3, 4);
        let g = named::path(6);
        let mut r = rng::stream(3, "perm", 0);
        let x = Mat::from_fn(6, 3, |_, _| r.random_range(0.0..1.0));
        let order = [3usize, 0, 5, 1, 4, 2];
        let gp = g.permuted(&order);
        let xp = Mat::from_fn(6, 3, |i, c| x[(order[i], c)]);
        let z = encode_graph(&g.to_mat(), &x, &p);
        let zp = encode_graph(&gp.to_mat(), &xp, &p);
        for i in 0..6 {
            for c in 0..4 {
                assert!((zp[(i, c)] - z[(order[i], c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_roundtrip() {
        let p = small_params(3, 9);
        let mut q = p.zeros_like();
        q.assign_flat(&p.to_flat());
        assert_eq!(p, q);
        assert_eq!(p.num_params(), p.to_flat().len());
    }
}
