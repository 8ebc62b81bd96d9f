//! Alternating generator / discriminator training.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::graph::{Graph, DEFAULT_DEGREE_BUCKETS};
use crate::graphon::{partition_motif_context, Graphon};
use crate::mat::Mat;
use crate::producer::RawCounterfactual;
use crate::rng;

use super::adam::Adam;
use super::generator::{init_edge_logits, threshold, GeneratorState, Similarity};
use super::gnn::{self, Architecture, DiscriminatorParams};
use super::losses::{
    self, connection_loss, contextual_loss, degree_entropy, degrees_f64, discriminator_loss,
    discriminator_loss_grad_logit, motif_consistency_loss_against, regularization_loss,
    AlignedRelaxed, RegSign, RegWeights, RelaxedContext, RelaxedCross,
};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrainConfig {
    pub steps: usize,
    pub gen_steps_per_iter: usize,
    pub disc_steps_per_iter: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub lambda_3: f64,
    /// Initialization rate γ.
    pub gamma: f64,
    /// Target connection ratio λ_g.
    pub lambda_g: f64,
    pub tau_g: f64,
    pub reg_sign: RegSign,
    /// Reuse one noise matrix per counterfactual instead of redrawing.
    pub frozen_noise: bool,
    pub hidden_dim: usize,
    pub gnn_layers: usize,
    pub mlp_layers: usize,
    pub degree_buckets: usize,
    /// Set from the run seed; not part of config files.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 500,
            gen_steps_per_iter: 1,
            disc_steps_per_iter: 1,
            learning_rate: 0.001,
            batch_size: 8,
            lambda_1: 1.0,
            lambda_2: 0.9,
            lambda_3: 0.6,
            gamma: 0.75,
            lambda_g: 0.8,
            tau_g: 1e-4,
            reg_sign: RegSign::Plus,
            frozen_noise: false,
            hidden_dim: 32,
            gnn_layers: 2,
            mlp_layers: 2,
            degree_buckets: DEFAULT_DEGREE_BUCKETS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("steps", self.steps),
            ("gen_steps_per_iter", self.gen_steps_per_iter),
            ("disc_steps_per_iter", self.disc_steps_per_iter),
            ("batch_size", self.batch_size),
            ("hidden_dim", self.hidden_dim),
            ("gnn_layers", self.gnn_layers),
            ("mlp_layers", self.mlp_layers),
            ("degree_buckets", self.degree_buckets),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if self.lambda_1 < 0.0 || self.lambda_2 < 0.0 || self.lambda_3 < 0.0 || self.lambda_g < 0.0
        {
            return Err(Error::config(
                "loss weights and lambda_g must be non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        if !(self.tau_g > 0.0 && self.tau_g <= 1.0) {
            return Err(Error::config("tau_g must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn weights(&self) -> RegWeights {
        RegWeights {
            motif: self.lambda_1,
            context: self.lambda_2,
            connection: self.lambda_3,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            in_dim: self.degree_buckets,
            hidden_dim: self.hidden_dim,
            gnn_layers: self.gnn_layers,
            mlp_layers: self.mlp_layers,
        }
    }
}

/// A raw counterfactual with the statistics of the realistic graph whose
/// context it imitates.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineTarget {
    pub raw: RawCounterfactual,
    /// Motif↔context edge count of the context donor.
    pub e_con_real: usize,
    /// Degree entropy of the context donor's contextual subgraph.
    pub real_context_entropy: f64,
}

impl RefineTarget {
    /// Measures the context donor `h` under its class graphon.
    pub fn from_context_donor(raw: RawCounterfactual, h: &Graph, wh: &Graphon) -> Self {
        let part = partition_motif_context(h, wh);
        let e_con_real = part
            .motif_nodes
            .iter()
            .map(|&u| {
                part.context_nodes
                    .iter()
                    .filter(|&&v| h.has_edge(u, v))
                    .count()
            })
            .sum();
        let ctx = h.induced_subgraph(&part.context_nodes);
        RefineTarget {
            raw,
            e_con_real,
            real_context_entropy: degree_entropy(&degrees_f64(&ctx)),
        }
    }
}

/// One row of the training trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub step: usize,
    pub l_gen: f64,
    pub l_dis: f64,
    pub l_motif: f64,
    pub l_context: f64,
    pub l_con: f64,
    pub p_real_mean: f64,
    pub p_gen_mean: f64,
}

#[derive(Debug, Clone)]
pub struct GanOutcome {
    /// Extracted graphs, one per target, over each scaffold's node layout.
    pub refined: Vec<Graph>,
    pub trace: Vec<TraceRow>,
    pub states: Vec<GeneratorState>,
    pub discriminator: DiscriminatorParams,
}

fn check(step: usize, component: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { step, component })
    }
}

/// Degree features of the thresholded relaxed matrix (no gradient).
fn generated_features(p: &Mat, buckets: usize) -> Mat {
    threshold(p).degree_features(buckets)
}

/// Generator-side loss terms for a batch and their gradients w.r.t. each `P`.
pub(crate) struct GenEval {
    pub l_gen: f64,
    pub l_motif: f64,
    pub l_context: f64,
    pub l_con: f64,
    pub d_p: Vec<Mat>,
}

/// Evaluates `−mean log p + sign·L_reg` on relaxed matrices.
pub(crate) fn generator_objective(
    states: &[&GeneratorState],
    targets: &[&RefineTarget],
    ps: &[Mat],
    w_rel: &Graphon,
    disc: &DiscriminatorParams,
    cfg: &TrainConfig,
) -> Result<GenEval> {
    let b = ps.len() as f64;
    let aligned: Vec<AlignedRelaxed<'_>> = ps
        .iter()
        .zip(states)
        .map(|(p, s)| AlignedRelaxed {
            p,
            alignment: &s.alignment,
        })
        .collect();
    let motif = motif_consistency_loss_against(&aligned, w_rel)?;
    let ctx: Vec<RelaxedContext<'_>> = ps
        .iter()
        .zip(states)
        .map(|(p, s)| RelaxedContext {
            p,
            context_start: s.scaffold.n_motif,
        })
        .collect();
    let e_rel: Vec<f64> = targets.iter().map(|t| t.real_context_entropy).collect();
    let context = contextual_loss(&ctx, &e_rel)?;
    let cross: Vec<RelaxedCross<'_>> = ps
        .iter()
        .zip(states)
        .map(|(p, s)| RelaxedCross {
            p,
            candidates: &s.scaffold.cross_candidates,
        })
        .collect();
    let e_con: Vec<usize> = targets.iter().map(|t| t.e_con_real).collect();
    let con = connection_loss(&cross, cfg.lambda_g, &e_con)?;
    let w = cfg.weights();
    let l_reg = regularization_loss(motif.value, context.value, con.value, w)?;
    let sign = cfg.reg_sign.factor();

    let mut adv = 0.0;
    let mut d_p = Vec::with_capacity(ps.len());
    for (k, p) in ps.iter().enumerate() {
        let x = generated_features(p, cfg.degree_buckets);
        let tape = gnn::forward(p, &x, disc);
        adv += discriminator_loss(tape.prob, 1.0) / b;
        let g = gnn::backward(
            &tape,
            disc,
            discriminator_loss_grad_logit(tape.prob, 1.0) / b,
        );
        let mut dp = g.adjacency;
        let n = p.rows();
        for i in 0..n {
            for j in 0..n {
                dp[(i, j)] += sign
                    * (w.motif * motif.grads[k][(i, j)]
                        + w.context * context.grads[k][(i, j)]
                        + w.connection * con.grads[k][(i, j)]);
            }
        }
        d_p.push(dp);
    }
    Ok(GenEval {
        l_gen: adv + sign * l_reg,
        l_motif: motif.value,
        l_context: context.value,
        l_con: con.value,
        d_p,
    })
}

fn choose_batch(len: usize, batch: usize, seed: u64, stage: &str, step: usize) -> Vec<usize> {
    if len <= batch {
        return (0..len).collect();
    }
    let mut idx = index::sample(&mut rng::stream(seed, stage, step as u64), len, batch).into_vec();
    idx.sort_unstable();
    idx
}

/// Refines `targets` against the realistic graphs `reals`, whose graphon at
/// resolution `k` anchors the motif consistency loss.
pub fn train_gan(
    targets: &[RefineTarget],
    reals: &[Graph],
    k: usize,
    cfg: &TrainConfig,
) -> Result<GanOutcome> {
    cfg.validate()?;
    if targets.is_empty() || reals.is_empty() {
        return Err(Error::arg(
            "GAN training needs counterfactuals and realistic graphs",
        ));
    }
    let w_rel = crate::graphon::estimate_graphon(reals, Some(k))?;
    losses::check_resolution(&w_rel, k)?;
    let real_inputs: Vec<(Mat, Mat)> = reals
        .iter()
        .map(|g| (g.to_mat(), g.degree_features(cfg.degree_buckets)))
        .collect();

    let mut states = Vec::with_capacity(targets.len());
    for t in targets {
        states.push(init_edge_logits(
            &t.raw,
            cfg.gamma,
            cfg.lambda_g,
            t.e_con_real,
            cfg.tau_g,
            &Similarity::Degree,
        )?);
    }
    let mut gen_opt: Vec<Adam> = states
        .iter()
        .map(|s| Adam::new(s.trainable.len(), cfg.learning_rate))
        .collect();
    let frozen: Vec<Mat> = if cfg.frozen_noise {
        states
            .iter()
            .enumerate()
            .map(|(i, s)| s.sample_noise(&mut rng::stream(cfg.seed, "frozen-noise", i as u64)))
            .collect()
    } else {
        Vec::new()
    };
    let noise = |states: &[GeneratorState], i: usize, stage: &str, step: usize| -> Mat {
        if cfg.frozen_noise {
            frozen[i].clone()
        } else {
            let key = (step as u64) << 20 | i as u64;
            states[i].sample_noise(&mut rng::stream(cfg.seed, stage, key))
        }
    };

    let mut disc =
        DiscriminatorParams::init(cfg.architecture(), rng::derive_seed(cfg.seed, "disc", 0))?;
    let mut disc_opt = Adam::new(disc.num_params(), cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let batch = choose_batch(states.len(), cfg.batch_size, cfg.seed, "gan-batch", step);
        let mut row = TraceRow {
            step,
            ..TraceRow::default()
        };

        for sub in 0..cfg.gen_steps_per_iter {
            let ps: Vec<Mat> = batch
                .iter()
                .map(|&i| {
                    states[i].relax_with(&noise(
                        &states,
                        i,
                        "gen-noise",
                        step * cfg.gen_steps_per_iter + sub,
                    ))
                })
                .collect();
            let st: Vec<&GeneratorState> = batch.iter().map(|&i| &states[i]).collect();
            let tg: Vec<&RefineTarget> = batch.iter().map(|&i| &targets[i]).collect();
            let eval = generator_objective(&st, &tg, &ps, &w_rel, &disc, cfg)?;
            row.l_motif = check(step, "l_motif", eval.l_motif)?;
            row.l_context = check(step, "l_context", eval.l_context)?;
            row.l_con = check(step, "l_con", eval.l_con)?;
            row.l_gen = check(step, "l_gen", eval.l_gen)?;
            for (slot, &i) in batch.iter().enumerate() {
                let grad = states[i].logit_grad(&ps[slot], &eval.d_p[slot]);
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonFinite {
                        step,
                        component: "generator gradient",
                    });
                }
                let mut values = states[i].trainable_values();
                gen_opt[i].step(&mut values, &grad);
                states[i].set_trainable_values(&values);
            }
        }

        for sub in 0..cfg.disc_steps_per_iter {
            let sub_step = step * cfg.disc_steps_per_iter + sub;
            let real_batch =
                choose_batch(reals.len(), batch.len(), cfg.seed, "real-batch", sub_step);
            let mut grad = disc.zeros_like();
            let total = (real_batch.len() + batch.len()) as f64;
            let mut l_dis = 0.0;
            let mut p_real = 0.0;
            let mut p_gen = 0.0;
            for &r in &real_batch {
                let (a, x) = &real_inputs[r];
                let tape = gnn::forward(a, x, &disc);
                l_dis += discriminator_loss(tape.prob, 1.0) / total;
                p_real += tape.prob / real_batch.len() as f64;
                let g = gnn::backward(
                    &tape,
                    &disc,
                    discriminator_loss_grad_logit(tape.prob, 1.0) / total,
                );
                grad.add_scaled(&g.params, 1.0);
            }
            for &i in &batch {
                let p = states[i].relax_with(&noise(&states, i, "disc-noise", sub_step));
                let x = generated_features(&p, cfg.degree_buckets);
                let tape = gnn::forward(&p, &x, &disc);
                l_dis += discriminator_loss(tape.prob, 0.0) / total;
                p_gen += tape.prob / batch.len() as f64;
                let g = gnn::backward(
                    &tape,
                    &disc,
                    discriminator_loss_grad_logit(tape.prob, 0.0) / total,
                );
                grad.add_scaled(&g.params, 1.0);
            }
            row.l_dis = check(step, "l_dis", l_dis)?;
            row.p_real_mean = p_real;
            row.p_gen_mean = p_gen;
            let g = grad.to_flat();
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step,
                    component: "discriminator gradient",
                });
            }
            let mut flat = disc.to_flat();
            disc_opt.step(&mut flat, &g);
            disc.assign_flat(&flat);
        }
        trace.push(row);
    }

    let refined = states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.extract_with(&s.sample_noise(&mut rng::stream(cfg.seed, "extract", i as u64)))
        })
        .collect();
    Ok(GanOutcome {
        refined,
        trace,
        states,
        discriminator: disc,
    })
}

impl Default for TraceRow {
    fn default() -> Self {
        TraceRow {
            step: 0,
            l_gen: 0.0,
            l_dis: 0.0,
            l_motif: 0.0,
            l_context: 0.0,
            l_con: 0.0,
            p_real_mean: 0.0,
            p_gen_mean: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;
    use crate::optimizer::generator::tests::toy_raw;
    use alloc::vec;

    fn setup() -> (Vec<RefineTarget>, Vec<Graph>, TrainConfig) {
        let t = RefineTarget {
            raw: toy_raw(),
            e_con_real: 2,
            real_context_entropy: 0.9,
        };
        let reals = vec![named::complete(3), named::cycle(5), named::path(4)];
        let cfg = TrainConfig {
            steps: 6,
            hidden_dim: 4,
            batch_size: 2,
            ..TrainConfig::default()
        };
        (vec![t.clone(), t], reals, cfg)
    }

    #[test]
    fn training_is_deterministic() {
        let (t, r, cfg) = setup();
        let a = train_gan(&t, &r, 3, &cfg).unwrap();
        let b = train_gan(&t, &r, 3, &cfg).unwrap();
        assert_eq!(a.refined, b.refined);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.states, b.states);
        let c = train_gan(&t, &r, 3, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn only_trainable_pairs_move() {
        let (t, r, cfg) = setup();
        let out = train_gan(
            &t,
            &r,
            3,
            &TrainConfig {
                learning_rate: 0.05,
                ..cfg
            },
        )
        .unwrap();
        let s = &out.states[0];
        let n = s.n();
        let mut moved = 0;
        for i in 0..n {
            for j in 0..n {
                let pair = (i.min(j), i.max(j));
                if s.trainable.contains(&pair) {
                    moved += usize::from(s.logits[(i, j)] != 1.0 && s.logits[(i, j)] != 0.0);
                } else {
                    assert_eq!(s.logits[(i, j)], 0.0, "frozen pair ({i}, {j}) moved");
                }
            }
        }
        assert!(moved > 0);
        assert!(s.logits.is_symmetric());
        let g = &out.refined[0];
        assert!(g
            .edges()
            .iter()
            .all(|&(i, j)| s.trainable.contains(&(i.min(j), i.max(j)))));
    }

    #[test]
    fn trace_has_one_finite_row_per_step() {
        let (t, r, cfg) = setup();
        let out = train_gan(&t, &r, 3, &cfg).unwrap();
        assert_eq!(out.trace.len(), cfg.steps);
        assert!(out
            .trace
            .iter()
            .enumerate()
            .all(|(i, row)| row.step == i && row.l_gen.is_finite()));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let (t, r, cfg) = setup();
        assert!(matches!(
            train_gan(&[], &r, 3, &cfg),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            train_gan(&t, &[], 3, &cfg),
            Err(Error::Argument(_))
        ));
    }
}
