//! Finite-difference verification of every analytic gradient.
//!
//! Each op is a scalar function of a parameter vector plus its analytic
//! gradient. At every random point the full gradient is compared against
//! central differences by normwise relative error
//! `‖g − ĝ‖ / max(‖g‖, ‖ĝ‖)`. Points lying on a non-differentiable set
//! (relu / max / abs / threshold switches within the step) are detected by
//! disagreeing one-sided differences and redrawn.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::graph::named;
use crate::graph::{Graph, Role};
use crate::graphon::{align_nodes, Graphon};
use crate::mat::Mat;
use crate::math::sqrt;
use crate::optimizer::generator::{init_edge_logits, GeneratorState, Similarity};
use crate::optimizer::gnn::{self, Architecture, DiscriminatorParams};
use crate::optimizer::losses::{
    connection_loss, contextual_loss, degree_entropy, degree_entropy_grad, discriminator_loss,
    discriminator_loss_grad_logit, motif_consistency_loss_against, AlignedRelaxed, RelaxedContext,
    RelaxedCross,
};
use crate::optimizer::train::{generator_objective, RefineTarget, TrainConfig};
use crate::producer::{CfNode, Provenance, RawCounterfactual};
use crate::rng;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_POINTS: usize = 20;
/// Redraws allowed per requested point before giving up on an op.
const MAX_REDRAWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    pub step: f64,
    pub tolerance: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            step: DEFAULT_STEP,
            tolerance: DEFAULT_TOLERANCE,
            points: DEFAULT_POINTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub name: String,
    pub points: usize,
    /// Points redrawn because they sat on a kink.
    pub redrawn: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub config: GradcheckConfig,
    pub ops: Vec<OpReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.ops.iter().all(|o| o.passed)
    }
}

/// A differentiable scalar function at a drawn point.
pub struct Problem {
    pub x: Vec<f64>,
    pub f: Box<dyn Fn(&[f64]) -> f64>,
    pub grad: Box<dyn Fn(&[f64]) -> Vec<f64>>,
}

/// Outcome of checking one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointCheck {
    Error(f64),
    Kink,
}

/// Central-difference comparison of `problem` at its point.
pub fn check_point(problem: &Problem, step: f64) -> PointCheck {
    let analytic = (problem.grad)(&problem.x);
    let f0 = (problem.f)(&problem.x);
    let mut x = problem.x.clone();
    let mut numeric = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let orig = x[k];
        x[k] = orig + step;
        let fp = (problem.f)(&x);
        x[k] = orig - step;
        let fm = (problem.f)(&x);
        x[k] = orig;
        let fwd = (fp - f0) / step;
        let bwd = (f0 - fm) / step;
        let central = (fp - fm) / (2.0 * step);
        if (fwd - bwd).abs() > 1e-3 * (1.0 + central.abs()) {
            return PointCheck::Kink;
        }
        numeric.push(central);
    }
    PointCheck::Error(rel_error(&analytic, &numeric))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, 0 when both vanish.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| sqrt(v.map(|x| x * x).sum());
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Runs `points` checks of problems drawn by `draw(rng)`.
pub fn check_op(
    name: &str,
    cfg: &GradcheckConfig,
    op_index: u64,
    draw: &dyn Fn(&mut rng::Rng) -> Problem,
) -> OpReport {
    let mut max_err: f64 = 0.0;
    let mut redrawn = 0;
    let mut done = 0;
    let mut rng = rng::stream(cfg.seed, "gradcheck", op_index);
    while done < cfg.points && redrawn <= MAX_REDRAWS * cfg.points {
        match check_point(&draw(&mut rng), cfg.step) {
            PointCheck::Error(e) => {
                max_err = if e.is_nan() {
                    f64::INFINITY
                } else {
                    max_err.max(e)
                };
                done += 1;
            }
            PointCheck::Kink => redrawn += 1,
        }
    }
    OpReport {
        name: name.into(),
        points: done,
        redrawn,
        max_rel_error: max_err,
        passed: done == cfg.points && max_err <= cfg.tolerance,
    }
}

fn rand_sym(n: usize, rng: &mut rng::Rng) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(0.05..0.95);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn rand_mat(r: usize, c: usize, rng: &mut rng::Rng) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn flatten(ms: &[Mat]) -> Vec<f64> {
    ms.iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .collect()
}

fn unflatten(x: &[f64], n: usize, count: usize) -> Vec<Mat> {
    (0..count)
        .map(|k| Mat::from_vec(n, n, x[k * n * n..(k + 1) * n * n].to_vec()))
        .collect()
}

const BATCH: usize = 3;
const N: usize = 6;

fn draw_motif(rng: &mut rng::Rng) -> Problem {
    let k = 3;
    let w = Graphon::new(rand_sym(k, rng)).expect("valid graphon");
    let ps: Vec<Mat> = (0..BATCH).map(|_| rand_sym(N, rng)).collect();
    let aligns: Vec<Vec<usize>> = (0..BATCH)
        .map(|_| {
            let g =
                Graph::from_adjacency(&rand_sym(N, rng).map(|v| if v > 0.5 { 1.0 } else { 0.0 }))
                    .expect("graph");
            align_nodes(&g)
        })
        .collect();
    let (w2, a2) = (w.clone(), aligns.clone());
    let eval = move |x: &[f64], w: &Graphon, aligns: &[Vec<usize>]| {
        let ps = unflatten(x, N, BATCH);
        let items: Vec<AlignedRelaxed<'_>> = ps
            .iter()
            .zip(aligns)
            .map(|(p, a)| AlignedRelaxed { p, alignment: a })
            .collect();
        motif_consistency_loss_against(&items, w).expect("motif loss")
    };
    Problem {
        x: flatten(&ps),
        f: Box::new(move |x| eval(x, &w, &aligns).value),
        grad: Box::new(move |x| flatten(&eval(x, &w2, &a2).grads)),
    }
}

fn draw_entropy(rng: &mut rng::Rng) -> Problem {
    let d: Vec<f64> = (0..N).map(|_| rng.random_range(0.2..4.0)).collect();
    Problem {
        x: d,
        f: Box::new(degree_entropy),
        grad: Box::new(degree_entropy_grad),
    }
}

fn draw_context(rng: &mut rng::Rng) -> Problem {
    let ps: Vec<Mat> = (0..BATCH).map(|_| rand_sym(N, rng)).collect();
    let starts: Vec<usize> = (0..BATCH).map(|_| rng.random_range(1..N - 2)).collect();
    // Targets far from the generated entropies keep |·| away from its kink.
    let targets: Vec<f64> = ps
        .iter()
        .zip(&starts)
        .map(|(p, &s)| {
            let d: Vec<f64> = (s..N)
                .map(|k| (s..N).filter(|&j| j != k).map(|j| p[(k, j)]).sum())
                .collect();
            let e = degree_entropy(&d);
            if rng.random_bool(0.5) {
                e + 0.3
            } else {
                e - 0.3
            }
        })
        .collect();
    let (s2, t2) = (starts.clone(), targets.clone());
    let eval = move |x: &[f64], starts: &[usize], targets: &[f64]| {
        let ps = unflatten(x, N, BATCH);
        let items: Vec<RelaxedContext<'_>> = ps
            .iter()
            .zip(starts)
            .map(|(p, &s)| RelaxedContext {
                p,
                context_start: s,
            })
            .collect();
        contextual_loss(&items, targets).expect("context loss")
    };
    Problem {
        x: flatten(&ps),
        f: Box::new(move |x| eval(x, &starts, &targets).value),
        grad: Box::new(move |x| flatten(&eval(x, &s2, &t2).grads)),
    }
}

fn draw_connection(rng: &mut rng::Rng) -> Problem {
    let ps: Vec<Mat> = (0..BATCH).map(|_| rand_sym(N, rng)).collect();
    let m = 2;
    let cands: Vec<(usize, usize)> = (0..m).flat_map(|i| (m..N).map(move |j| (i, j))).collect();
    let e_con: Vec<usize> = (0..BATCH).map(|_| rng.random_range(0..12)).collect();
    let lambda_g = rng.random_range(0.3..1.0);
    let (c2, e2) = (cands.clone(), e_con.clone());
    let eval = move |x: &[f64], cands: &[(usize, usize)], e_con: &[usize]| {
        let ps = unflatten(x, N, BATCH);
        let items: Vec<RelaxedCross<'_>> = ps
            .iter()
            .map(|p| RelaxedCross {
                p,
                candidates: cands,
            })
            .collect();
        connection_loss(&items, lambda_g, e_con).expect("connection loss")
    };
    Problem {
        x: flatten(&ps),
        f: Box::new(move |x| eval(x, &cands, &e_con).value),
        grad: Box::new(move |x| flatten(&eval(x, &c2, &e2).grads)),
    }
}

fn small_arch() -> Architecture {
    Architecture {
        in_dim: 4,
        hidden_dim: 5,
        gnn_layers: 2,
        mlp_layers: 2,
    }
}

fn rand_params(rng: &mut rng::Rng) -> DiscriminatorParams {
    let mut p = DiscriminatorParams::init(small_arch(), rng.random()).expect("architecture");
    let flat: Vec<f64> = (0..p.num_params())
        .map(|_| rng.random_range(-0.8..0.8))
        .collect();
    p.assign_flat(&flat);
    p
}

fn gnn_gnn_len(p: &DiscriminatorParams) -> usize {
    p.gnn_layers
        .iter()
        .map(|l| l.weight.as_slice().len() + l.bias.len())
        .sum()
}

/// `Σ C ⊙ Z` as a function of the encoder parameters.
fn draw_encoder_params(rng: &mut rng::Rng) -> Problem {
    let params = rand_params(rng);
    let a = rand_sym(N, rng);
    let x = rand_mat(N, 4, rng);
    let c = rand_mat(N, 5, rng);
    let split = gnn_gnn_len(&params);
    let base = params.to_flat();
    let head = base[split..].to_vec();
    let with = move |theta: &[f64], params: &DiscriminatorParams, head: &[f64]| {
        let mut p = params.clone();
        let mut flat = theta.to_vec();
        flat.extend_from_slice(head);
        p.assign_flat(&flat);
        p
    };
    let (p1, p2, h1, h2) = (params.clone(), params, head.clone(), head);
    let (a2, x2, c2) = (a.clone(), x.clone(), c.clone());
    Problem {
        x: base[..split].to_vec(),
        f: Box::new(move |t| {
            let z = gnn::encode_graph(&a, &x, &with(t, &p1, &h1));
            z.as_slice()
                .iter()
                .zip(c.as_slice())
                .map(|(u, v)| u * v)
                .sum()
        }),
        grad: Box::new(move |t| {
            let p = with(t, &p2, &h2);
            let tape = gnn::forward(&a2, &x2, &p);
            let mut g = p.zeros_like();
            gnn::backward_encoder(&tape, &p, &c2, &mut g);
            g.to_flat()[..split].to_vec()
        }),
    }
}

/// `Σ C ⊙ Z` as a function of the (weighted) adjacency entries.
fn draw_encoder_adjacency(rng: &mut rng::Rng) -> Problem {
    let params = rand_params(rng);
    let a = rand_sym(N, rng);
    let x = rand_mat(N, 4, rng);
    let c = rand_mat(N, 5, rng);
    let (p2, x2, c2) = (params.clone(), x.clone(), c.clone());
    Problem {
        x: a.as_slice().to_vec(),
        f: Box::new(move |v| {
            let z = gnn::encode_graph(&Mat::from_vec(N, N, v.to_vec()), &x, &params);
            z.as_slice()
                .iter()
                .zip(c.as_slice())
                .map(|(u, w)| u * w)
                .sum()
        }),
        grad: Box::new(move |v| {
            let tape = gnn::forward(&Mat::from_vec(N, N, v.to_vec()), &x2, &p2);
            let mut g = p2.zeros_like();
            gnn::backward_encoder(&tape, &p2, &c2, &mut g)
                .as_slice()
                .to_vec()
        }),
    }
}

fn draw_pooling(rng: &mut rng::Rng) -> Problem {
    let z = rand_mat(N, 5, rng);
    let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c2 = c.clone();
    Problem {
        x: z.as_slice().to_vec(),
        f: Box::new(move |v| {
            let rep = gnn::graph_representation(&Mat::from_vec(N, 5, v.to_vec()));
            rep.iter().zip(&c).map(|(a, b)| a * b).sum()
        }),
        grad: Box::new(move |v| {
            gnn::graph_representation_grad(&Mat::from_vec(N, 5, v.to_vec()), &c2)
                .as_slice()
                .to_vec()
        }),
    }
}

/// Head logit as a function of the MLP parameters and the representation.
fn draw_mlp(rng: &mut rng::Rng) -> Problem {
    let params = rand_params(rng);
    let split = gnn_gnn_len(&params);
    let rep: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let base = params.to_flat();
    let gnn_part = base[..split].to_vec();
    let mut x0 = base[split..].to_vec();
    let head_len = x0.len();
    x0.extend_from_slice(&rep);
    let build = move |v: &[f64], params: &DiscriminatorParams, gnn_part: &[f64]| {
        let mut p = params.clone();
        let mut flat = gnn_part.to_vec();
        flat.extend_from_slice(&v[..head_len]);
        p.assign_flat(&flat);
        (p, v[head_len..].to_vec())
    };
    let (p1, g1) = (params.clone(), gnn_part.clone());
    Problem {
        x: x0,
        f: Box::new(move |v| {
            let (p, rep) = build(v, &p1, &g1);
            gnn::head_logit(&rep, &p)
        }),
        grad: Box::new(move |v| {
            let (p, rep) = build(v, &params, &gnn_part);
            let tape = gnn::head_tape(&rep, &p);
            let mut g = p.zeros_like();
            let d_rep = gnn::backward_head(&tape, &p, 1.0, &mut g);
            let mut out = g.to_flat()[split..].to_vec();
            out.extend(d_rep);
            out
        }),
    }
}

/// `BCE(σ(h(f(A, X))), y)` as a function of all discriminator parameters.
fn draw_bce(rng: &mut rng::Rng) -> Problem {
    let params = rand_params(rng);
    let a = rand_sym(N, rng);
    let x = rand_mat(N, 4, rng);
    let y = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
    let (p2, a2, x2) = (params.clone(), a.clone(), x.clone());
    Problem {
        x: params.to_flat(),
        f: Box::new(move |t| {
            let mut p = params.clone();
            p.assign_flat(t);
            discriminator_loss(gnn::forward(&a, &x, &p).prob, y)
        }),
        grad: Box::new(move |t| {
            let mut p = p2.clone();
            p.assign_flat(t);
            let tape = gnn::forward(&a2, &x2, &p);
            gnn::backward(&tape, &p, discriminator_loss_grad_logit(tape.prob, y))
                .params
                .to_flat()
        }),
    }
}

/// Toy scaffold: triangle motif plus a 4-node path context.
fn toy_scaffold() -> RawCounterfactual {
    let n_motif = 3;
    let n = 7;
    let mut g = Graph::empty(n);
    for (u, v) in named::complete(3).edges() {
        g.set_edge(u, v, true);
    }
    for k in n_motif..n - 1 {
        g.set_edge(k, k + 1, true);
    }
    g.set_edge(0, 3, true);
    let nodes = (0..n)
        .map(|i| CfNode {
            role: if i < n_motif {
                Role::Motif
            } else {
                Role::Context
            },
            source: i,
        })
        .collect();
    RawCounterfactual {
        nodes,
        graph: g,
        n_motif,
        cross_candidates: (0..n_motif)
            .flat_map(|i| (n_motif..n).map(move |j| (i, j)))
            .collect(),
        initial_cross_edges: vec![(0, 3)],
        provenance: Provenance {
            g_id: 0,
            h_id: 1,
            label: 0,
            seed: 0,
            self_recombination: false,
            resampled_cross: false,
        },
    }
}

/// Full generator objective `−log p + L_reg` as a function of the trainable
/// logits, through the relaxation at a moderate temperature.
fn draw_generator(rng: &mut rng::Rng) -> Problem {
    let raw = toy_scaffold();
    let cfg = TrainConfig {
        tau_g: 0.5,
        degree_buckets: 4,
        hidden_dim: 5,
        gnn_layers: 2,
        mlp_layers: 2,
        ..TrainConfig::default()
    };
    let e_con = rng.random_range(1..8);
    let target = RefineTarget {
        raw: raw.clone(),
        e_con_real: e_con,
        real_context_entropy: rng.random_range(0.2..0.9),
    };
    let mut state = init_edge_logits(
        &raw,
        cfg.gamma,
        cfg.lambda_g,
        e_con,
        cfg.tau_g,
        &Similarity::Degree,
    )
    .expect("toy scaffold has candidates");
    let values: Vec<f64> = (0..state.trainable.len())
        .map(|_| rng.random_range(-0.5..1.5))
        .collect();
    state.set_trainable_values(&values);
    let noise = state.sample_noise(rng);
    let w_rel = Graphon::new(rand_sym(3, rng)).expect("valid graphon");
    let disc = rand_params(rng);
    let objective = move |v: &[f64], want_grad: bool| -> (f64, Vec<f64>) {
        let mut s: GeneratorState = state.clone();
        s.set_trainable_values(v);
        let p = s.relax_with(&noise);
        let eval = generator_objective(
            &[&s],
            &[&target],
            core::slice::from_ref(&p),
            &w_rel,
            &disc,
            &cfg,
        )
        .expect("generator objective");
        let g = if want_grad {
            s.logit_grad(&p, &eval.d_p[0])
        } else {
            Vec::new()
        };
        (eval.l_gen, g)
    };
    let obj = alloc::rc::Rc::new(objective);
    let o2 = obj.clone();
    Problem {
        x: values,
        f: Box::new(move |v| obj(v, false).0),
        grad: Box::new(move |v| o2(v, true).1),
    }
}

/// Sanity op: the relaxation itself, `Σ C ⊙ σ((𝒲 − X)/τ)`.
fn draw_relaxation(rng: &mut rng::Rng) -> Problem {
    let raw = toy_scaffold();
    let tau = rng.random_range(0.2..1.0);
    let state = init_edge_logits(&raw, 0.75, 0.8, 4, tau, &Similarity::Degree).expect("candidates");
    let x = state.sample_noise(rng);
    let c = rand_mat(raw.n(), raw.n(), rng);
    let values: Vec<f64> = (0..state.trainable.len())
        .map(|_| rng.random_range(-0.5..1.5))
        .collect();
    let (s2, x2, c2) = (state.clone(), x.clone(), c.clone());
    Problem {
        x: values,
        f: Box::new(move |v| {
            let mut s = state.clone();
            s.set_trainable_values(v);
            let p = s.relax_with(&x);
            p.as_slice()
                .iter()
                .zip(c.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        }),
        grad: Box::new(move |v| {
            let mut s = s2.clone();
            s.set_trainable_values(v);
            let p = s.relax_with(&x2);
            s.logit_grad(&p, &c2)
        }),
    }
}

/// Every op of the suite, in report order.
pub fn ops() -> Vec<(&'static str, fn(&mut rng::Rng) -> Problem)> {
    vec![
        (
            "motif_consistency_loss",
            draw_motif as fn(&mut rng::Rng) -> Problem,
        ),
        ("degree_entropy", draw_entropy),
        ("contextual_loss", draw_context),
        ("connection_loss", draw_connection),
        ("encoder_params", draw_encoder_params),
        ("encoder_adjacency", draw_encoder_adjacency),
        ("pooling", draw_pooling),
        ("mlp_head", draw_mlp),
        ("bce_chain", draw_bce),
        ("edge_relaxation", draw_relaxation),
        ("generator_chain", draw_generator),
    ]
}

/// Runs the whole suite.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> GradcheckReport {
    let ops = ops()
        .into_iter()
        .enumerate()
        .map(|(i, (name, draw))| check_op(name, cfg, i as u64, &draw))
        .collect();
    GradcheckReport { config: *cfg, ops }
}
