//! Generator and discriminator losses with their analytic gradients.
//!
//! Gradients are taken with respect to every entry of each relaxed edge
//! matrix `P`, treating `P[i][j]` and `P[j][i]` as separate variables. The
//! generator chains both entries back onto the shared logit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::{estimate_graphon, Graphon};
use crate::mat::Mat;
use crate::math::{ln, sign};

/// Clamp used by the binary cross-entropy.
pub const BCE_EPS: f64 = 1e-7;

/// Loss value and `∂L/∂P_k` for each item of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grads: Vec<Mat>,
}

/// Relaxed edge matrix together with the frozen node alignment of its
/// scaffold (entry `p` is the node at aligned position `p`).
#[derive(Debug, Clone, Copy)]
pub struct AlignedRelaxed<'a> {
    pub p: &'a Mat,
    pub alignment: &'a [usize],
}

/// `Σ_ij (W_gen − W_rel)²` where `W_gen` averages the aligned top-`K` blocks
/// of the relaxed matrices.
pub fn motif_consistency_loss_against(
    gen: &[AlignedRelaxed<'_>],
    w_rel: &Graphon,
) -> Result<LossGrad> {
    if gen.is_empty() {
        return Err(Error::arg("motif consistency loss needs a non-empty batch"));
    }
    let k = w_rel.k();
    let b = gen.len() as f64;
    let mut w_gen = Mat::zeros(k, k);
    for item in gen {
        let m = k.min(item.alignment.len());
        for a in 0..m {
            for c in 0..m {
                w_gen[(a, c)] += item.p[(item.alignment[a], item.alignment[c])] / b;
            }
        }
    }
    let mut value = 0.0;
    let diff = Mat::from_fn(k, k, |a, c| {
        let d = w_gen[(a, c)] - w_rel.get(a, c);
        value += d * d;
        d
    });
    let grads = gen
        .iter()
        .map(|item| {
            let n = item.p.rows();
            let mut g = Mat::zeros(n, n);
            let m = k.min(item.alignment.len());
            for a in 0..m {
                for c in 0..m {
                    g[(item.alignment[a], item.alignment[c])] += 2.0 * diff[(a, c)] / b;
                }
            }
            g
        })
        .collect();
    Ok(LossGrad { value, grads })
}

/// Motif consistency loss against the graphon of `real` at resolution `k`.
pub fn motif_consistency_loss(
    gen: &[AlignedRelaxed<'_>],
    real: &[Graph],
    k: usize,
) -> Result<LossGrad> {
    if real.is_empty() {
        return Err(Error::arg("motif consistency loss needs realistic graphs"));
    }
    let w_rel = estimate_graphon(real, Some(k))?;
    motif_consistency_loss_against(gen, &w_rel)
}

/// Checks that a precomputed realistic graphon has the expected resolution.
pub fn check_resolution(w_rel: &Graphon, k: usize) -> Result<()> {
    if w_rel.k() != k {
        return Err(Error::arg(format!(
            "graphon resolution mismatch: {} vs {k}",
            w_rel.k()
        )));
    }
    Ok(())
}

/// Total degree mass below which a relaxed subgraph counts as edgeless.
pub const ENTROPY_MIN_MASS: f64 = 1e-9;

/// Normalized degree entropy `−(1/ln n) Σ p_k ln p_k`, `p_k = d_k / Σ d`.
/// Terms with `p_k = 0` contribute 0; `n = 1` or `Σ d < ENTROPY_MIN_MASS` gives 0.
pub fn degree_entropy(degrees: &[f64]) -> f64 {
    let n = degrees.len();
    let total: f64 = degrees.iter().sum();
    if n <= 1 || total < ENTROPY_MIN_MASS {
        return 0.0;
    }
    let s: f64 = degrees
        .iter()
        .map(|&d| d / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * ln(p))
        .sum();
    -s / ln(n as f64)
}

/// `∂E/∂d_m = −(ln p_m − Σ_k p_k ln p_k) / (D ln n)`; 0 where `p_m` underflows to 0.
pub fn degree_entropy_grad(degrees: &[f64]) -> Vec<f64> {
    let n = degrees.len();
    let total: f64 = degrees.iter().sum();
    if n <= 1 || total < ENTROPY_MIN_MASS {
        return vec![0.0; n];
    }
    let plogp: f64 = degrees
        .iter()
        .map(|&d| d / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * ln(p))
        .sum();
    let scale = -1.0 / (total * ln(n as f64));
    degrees
        .iter()
        .map(|&d| {
            let p = d / total;
            if p > 0.0 {
                scale * (ln(p) - plogp)
            } else {
                0.0
            }
        })
        .collect()
}

/// Integer degree sequence as reals.
pub fn degrees_f64(g: &Graph) -> Vec<f64> {
    g.degree_sequence().into_iter().map(|d| d as f64).collect()
}

/// Relaxed matrix and the index where its context nodes start.
#[derive(Debug, Clone, Copy)]
pub struct RelaxedContext<'a> {
    pub p: &'a Mat,
    pub context_start: usize,
}

fn context_degrees(item: &RelaxedContext<'_>) -> Vec<f64> {
    let n = item.p.rows();
    (item.context_start..n)
        .map(|k| {
            (item.context_start..n)
                .filter(|&j| j != k)
                .map(|j| item.p[(k, j)])
                .sum()
        })
        .collect()
}

/// `Σ_i |E_gen^i − E_rel^i|` with generated degrees taken as row sums of the
/// relaxed matrix over context nodes.
pub fn contextual_loss(gen: &[RelaxedContext<'_>], real_entropies: &[f64]) -> Result<LossGrad> {
    if gen.len() != real_entropies.len() {
        return Err(Error::arg(format!(
            "contextual loss length mismatch: {} generated vs {} realistic",
            gen.len(),
            real_entropies.len()
        )));
    }
    if gen.is_empty() {
        return Err(Error::arg("contextual loss needs a non-empty batch"));
    }
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(gen.len());
    for (item, &e_rel) in gen.iter().zip(real_entropies) {
        let d = context_degrees(item);
        let diff = degree_entropy(&d) - e_rel;
        value += diff.abs();
        let de = degree_entropy_grad(&d);
        let n = item.p.rows();
        let mut g = Mat::zeros(n, n);
        let sg = sign(diff);
        for (ki, k) in (item.context_start..n).enumerate() {
            for j in item.context_start..n {
                if j != k {
                    g[(k, j)] = sg * de[ki];
                }
            }
        }
        grads.push(g);
    }
    Ok(LossGrad { value, grads })
}

/// Convenience for realistic context graphs.
pub fn contextual_loss_graphs(
    gen: &[RelaxedContext<'_>],
    real_contexts: &[Graph],
) -> Result<LossGrad> {
    let e: Vec<f64> = real_contexts
        .iter()
        .map(|g| degree_entropy(&degrees_f64(g)))
        .collect();
    contextual_loss(gen, &e)
}

/// Relaxed matrix with the motif × context candidate pairs of its scaffold.
#[derive(Debug, Clone, Copy)]
pub struct RelaxedCross<'a> {
    pub p: &'a Mat,
    pub candidates: &'a [(usize, usize)],
}

/// `(1/n) Σ_k |λ_g E_con^k − Σ_{(i,j)∈C_k} P_k[i][j]|`.
pub fn connection_loss(
    gen: &[RelaxedCross<'_>],
    lambda_g: f64,
    e_con_real: &[usize],
) -> Result<LossGrad> {
    if gen.is_empty() {
        return Err(Error::arg("connection loss needs a non-empty batch"));
    }
    if gen.len() != e_con_real.len() {
        return Err(Error::arg("connection loss length mismatch"));
    }
    let b = gen.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(gen.len());
    for (item, &e) in gen.iter().zip(e_con_real) {
        let p_gen: f64 = item.candidates.iter().map(|&(i, j)| item.p[(i, j)]).sum();
        let diff = lambda_g * e as f64 - p_gen;
        value += diff.abs() / b;
        let n = item.p.rows();
        let mut g = Mat::zeros(n, n);
        for &(i, j) in item.candidates {
            g[(i, j)] = -sign(diff) / b;
        }
        grads.push(g);
    }
    Ok(LossGrad { value, grads })
}

/// Weights of the three regularizers.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegWeights {
    pub motif: f64,
    pub context: f64,
    pub connection: f64,
}

impl Default for RegWeights {
    fn default() -> Self {
        RegWeights {
            motif: 1.0,
            context: 0.9,
            connection: 0.6,
        }
    }
}

/// `λ1 L_motif + λ2 L_context + λ3 L_con`.
pub fn regularization_loss(l_motif: f64, l_context: f64, l_con: f64, w: RegWeights) -> Result<f64> {
    if w.motif < 0.0 || w.context < 0.0 || w.connection < 0.0 {
        return Err(Error::config("regularization weights must be non-negative"));
    }
    Ok(w.motif * l_motif + w.context * l_context + w.connection * l_con)
}

/// Binary cross-entropy with `p` clamped to `[ε, 1 − ε]`.
pub fn discriminator_loss(p: f64, label: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -label * ln(p) - (1.0 - label) * ln(1.0 - p)
}

/// `∂ BCE / ∂ logit` for `p = σ(logit)`; zero inside the clamped region.
pub fn discriminator_loss_grad_logit(p: f64, label: f64) -> f64 {
    if p < BCE_EPS {
        // ∂/∂p of −l·ln ε − (1−l)·ln(1−p)
        (1.0 - label) * p
    } else if p > 1.0 - BCE_EPS {
        -label * (1.0 - p)
    } else {
        p - label
    }
}

/// Sign applied to the regularizer inside the generator loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegSign {
    /// `−log p + L_reg`: the regularizer is minimized.
    #[default]
    Plus,
    /// `−log p − L_reg`, literally as printed.
    Minus,
}

impl RegSign {
    pub fn factor(self) -> f64 {
        match self {
            RegSign::Plus => 1.0,
            RegSign::Minus => -1.0,
        }
    }
}

/// `−log p_gen ± L_reg`, `p_gen` clamped like the BCE.
pub fn generator_loss(p_gen: f64, l_reg: f64, sign: RegSign) -> f64 {
    discriminator_loss(p_gen, 1.0) + sign.factor() * l_reg
}

/// Literal `−log(p) − L_reg`.
pub fn generator_loss_literal(p_gen: f64, l_reg: f64) -> f64 {
    generator_loss(p_gen, l_reg, RegSign::Minus)
}
