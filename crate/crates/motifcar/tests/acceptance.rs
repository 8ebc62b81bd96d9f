//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). It exits nonzero when a
//! criterion fails that is not listed in `KNOWN_FAILURES`; the listed ones
//! still print FAIL with their measurements.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use motifcar_core::detector::ClassifierConfig;
use motifcar_core::gradcheck::{run_gradcheck, GradcheckConfig};
use motifcar_core::graph::Graph;
use motifcar_core::graphon::align_nodes;
use motifcar_core::graphon::{
    binarize, estimate_graphon, homomorphism_density, sample_graph, BinarizeMode, Graphon,
};
use motifcar_core::mat::Mat;
use motifcar_core::optimizer::{train_gan, RefineTarget, TrainConfig};
use motifcar_core::pipeline::{quality, run_experiment, ExperimentConfig, Sequential};
use motifcar_core::producer::{
    merge_graphs, plan_pairs, produce_batch, produce_raw_counterfactual, verify_decomposition,
    DonorIds, ProducerConfig,
};
use motifcar_core::rng;
use motifcar_core::synth::{generate_planted_motif_dataset, PlantedMotifConfig};
use rand::Rng as _;

/// Criteria whose failure is understood and recorded; see the README.
const KNOWN_FAILURES: &[u32] = &[2, 3, 7, 9];

const DESK_SEED: u64 = 1;
const SEEDS: u64 = 5;

struct Outcome {
    id: u32,
    passed: bool,
    what: &'static str,
    detail: String,
    secs: f64,
}

fn timed(id: u32, what: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = f();
    report(id, what, passed, detail, t.elapsed().as_secs_f64())
}

/// For criteria sharing one computation; `secs` is the shared wall time.
fn report(id: u32, what: &'static str, passed: bool, detail: String, secs: f64) -> Outcome {
    let out = Outcome {
        id,
        passed,
        what,
        detail,
        secs,
    };
    println!(
        "criterion {:>2} {} {}: {} ({:.1} s)",
        out.id,
        if out.passed { "PASS" } else { "FAIL" },
        out.what,
        out.detail,
        out.secs
    );
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c1() -> Outcome {
    timed(1, "gradient suite", || {
        let t = Instant::now();
        let report = run_gradcheck(&GradcheckConfig::default());
        let secs = t.elapsed().as_secs_f64();
        let worst = report
            .ops
            .iter()
            .map(|o| o.max_rel_error)
            .fold(0.0, f64::max);
        let failed: Vec<&str> = report
            .ops
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.name.as_str())
            .collect();
        (
            report.passed() && report.ops.iter().all(|o| o.points == 20) && secs < 60.0,
            format!(
                "{} ops x 20 points, worst rel err {worst:.2e}, failed {failed:?}",
                report.ops.len()
            ),
        )
    })
}

fn c2() -> Outcome {
    timed(2, "graphon recovery", || {
        let truth =
            Graphon::new(Mat::from_fn(2, 2, |i, j| if i == j { 0.9 } else { 0.1 })).unwrap();
        let samples: Vec<Graph> = (0..200)
            .map(|s| sample_graph(&truth, 10, s).unwrap())
            .collect();
        let est = estimate_graphon(&samples, Some(10)).unwrap();
        let mut errors = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                let cells: Vec<f64> = (a * 5..a * 5 + 5)
                    .flat_map(|i| (b * 5..b * 5 + 5).map(move |j| (i, j)))
                    .filter(|(i, j)| i != j)
                    .map(|(i, j)| est.get(i, j))
                    .collect();
                errors.push((mean(&cells) - truth.get(a, b)).abs());
            }
        }
        let worst = errors.iter().copied().fold(0.0, f64::max);
        (
            worst <= 0.1,
            format!("block errors {:.3?}, worst {worst:.3} (limit 0.1)", errors),
        )
    })
}

fn desk() -> motifcar_core::LabeledDataset {
    generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(50, DESK_SEED)).unwrap()
}

fn c3() -> Outcome {
    timed(3, "motif persistence", || {
        let ds = desk();
        let cfg = PlantedMotifConfig::desk_fixture(50, DESK_SEED);
        let mut ok = true;
        let mut parts = Vec::new();
        for (class, planted) in cfg.classes.iter().enumerate() {
            let graphs: Vec<Graph> = (0..ds.len())
                .filter(|&i| ds.labels[i] == class)
                .map(|i| ds.graphs[i].clone())
                .collect();
            let w = estimate_graphon(&graphs, None).unwrap();
            let mut bin = binarize(&w, BinarizeMode::Threshold(0.5)).unwrap();
            for i in 0..w.k() {
                bin[(i, i)] = 0.0;
            }
            let reference =
                homomorphism_density(&planted.motif, &Graph::from_adjacency(&bin).unwrap())
                    .unwrap();
            let mut d: Vec<f64> = (0..50)
                .map(|s| {
                    let g = sample_graph(&w, w.k(), rng::derive_seed(DESK_SEED, "persistence", s))
                        .unwrap();
                    homomorphism_density(&planted.motif, &g).unwrap()
                })
                .collect();
            d.sort_by(f64::total_cmp);
            let median = (d[24] + d[25]) / 2.0;
            ok &= median >= 0.5 * reference;
            parts.push(format!(
                "class {class}: median {median:.4} vs binarized {reference:.4}"
            ));
        }
        (ok, parts.join("; "))
    })
}

fn c4() -> Outcome {
    timed(4, "producer algebra", || {
        let ds = desk();
        let w: Vec<Graphon> = (0..2)
            .map(|c| {
                let g: Vec<Graph> = (0..ds.len())
                    .filter(|&i| ds.labels[i] == c)
                    .map(|i| ds.graphs[i].clone())
                    .collect();
                estimate_graphon(&g, Some(4)).unwrap()
            })
            .collect();
        let mut r = rng::stream(DESK_SEED, "acceptance-pairs", 0);
        let mut bad = Vec::new();
        for p in 0..100u64 {
            let (gi, hi) = (r.random_range(0..ds.len()), r.random_range(0..ds.len()));
            let eta = r.random_range(1..=5usize);
            let (g, h) = (&ds.graphs[gi], &ds.graphs[hi]);
            let (wg, wh) = (&w[ds.labels[gi]], &w[ds.labels[hi]]);
            let ga = g.permuted(&align_nodes(g));
            let ha = h.permuted(&align_nodes(h));
            let merged = merge_graphs(&ga, &ha, eta, &mut rng::stream(p, "merge", 0)).unwrap();
            if merged.ap.edge_count() != g.edge_count() + h.edge_count() + eta {
                bad.push(format!("pair {p}: |E(A_p)|"));
            }
            let ids = DonorIds {
                g_id: gi,
                h_id: hi,
                label: ds.labels[gi],
            };
            let mode = BinarizeMode::Threshold(0.5);
            match produce_raw_counterfactual(g, h, wg, wh, eta, p, mode, ids) {
                Ok(raw) => {
                    if raw.initial_cross_edges.is_empty() {
                        bad.push(format!("pair {p}: no cross edge"));
                    }
                    if let Err(e) = verify_decomposition(&raw, g, h, wg, wh, mode) {
                        bad.push(format!("pair {p}: {e}"));
                    }
                }
                Err(e) => bad.push(format!("pair {p}: {e}")),
            }
        }
        (
            bad.is_empty(),
            if bad.is_empty() {
                "100 pairs, all invariants hold".into()
            } else {
                bad.join("; ")
            },
        )
    })
}

/// Full-batch refinement schedule used on the desk fixture.
fn desk_gan(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.01,
        batch_size: 1000,
        seed,
        ..TrainConfig::default()
    }
}

fn c5_c6() -> (Outcome, Outcome) {
    let t = Instant::now();
    let ds = desk();
    let producer = ProducerConfig::default();
    let mut cross = Vec::new();
    let mut motif = Vec::new();
    let mut finite = true;
    let mut errors = Vec::new();
    for class in 0..2 {
        let ids: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        let reals: Vec<Graph> = ids.iter().map(|&i| ds.graphs[i].clone()).collect();
        let w = estimate_graphon(&reals, Some(4)).unwrap();
        let pairs = plan_pairs(
            &ds,
            &ids,
            &|_| Some(4),
            &producer,
            rng::derive_seed(DESK_SEED, "pairs", class as u64),
        );
        let wc = w.clone();
        let batch = produce_batch(&ds, &pairs, &|_| Some(wc.clone()), &producer);
        let targets: Vec<RefineTarget> = batch
            .produced
            .iter()
            .map(|r| RefineTarget::from_context_donor(r.clone(), &ds.graphs[r.provenance.h_id], &w))
            .collect();
        let e_con = mean(
            &targets
                .iter()
                .map(|t| t.e_con_real as f64)
                .collect::<Vec<_>>(),
        );
        match train_gan(
            &targets,
            &reals,
            4,
            &desk_gan(rng::derive_seed(DESK_SEED, "gan", class as u64)),
        ) {
            Ok(out) => {
                let c: Vec<f64> = out
                    .refined
                    .iter()
                    .zip(&out.states)
                    .map(|(g, s)| s.cross_edges(g) as f64)
                    .collect();
                let target = desk_gan(0).lambda_g * e_con;
                cross.push((class, mean(&c), target));
                let n = out.trace.len();
                let win = (n / 10).max(1);
                let lead = mean(
                    &out.trace[..win]
                        .iter()
                        .map(|r| r.l_motif)
                        .collect::<Vec<_>>(),
                );
                let trail = mean(
                    &out.trace[n - win..]
                        .iter()
                        .map(|r| r.l_motif)
                        .collect::<Vec<_>>(),
                );
                motif.push((class, lead, trail));
                finite &= out.trace.iter().all(|r| {
                    [
                        r.l_gen,
                        r.l_dis,
                        r.l_motif,
                        r.l_context,
                        r.l_con,
                        r.p_real_mean,
                        r.p_gen_mean,
                    ]
                    .iter()
                    .all(|v| v.is_finite())
                });
            }
            Err(e) => errors.push(format!("class {class}: {e}")),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok5 = errors.is_empty()
        && cross.iter().all(|(_, c, tg)| (c - tg).abs() <= 0.3 * tg)
        && secs < 300.0;
    let d5 = cross
        .iter()
        .map(|(c, m, tg)| format!("class {c}: cross {m:.2} vs target {tg:.2}"))
        .chain(errors.iter().cloned())
        .collect::<Vec<_>>()
        .join("; ");
    let o5 = report(5, "sparsity control", ok5, d5, secs);
    let ok6 = errors.is_empty() && finite && motif.iter().all(|(_, lead, trail)| trail < lead);
    let d6 = motif
        .iter()
        .map(|(c, lead, trail)| format!("class {c}: L_motif lead {lead:.4} trail {trail:.4}"))
        .chain(errors)
        .collect::<Vec<_>>()
        .join("; ");
    let o6 = report(
        6,
        "motif consistency trains",
        ok6,
        format!("{d6}; all losses finite: {finite}"),
        secs,
    );
    (o5, o6)
}

struct Paired {
    f1_on: f64,
    f1_off: f64,
    realism_raw: f64,
    realism_ref: f64,
    sparsity_raw: f64,
    sparsity_ref: f64,
    validity_raw: f64,
    validity_ref: f64,
}

fn paired_config() -> ExperimentConfig {
    ExperimentConfig {
        keep_fraction: 1.0,
        graphon_k: Some(4),
        gan: desk_gan(0),
        classifier: ClassifierConfig {
            learning_rate: 0.01,
            ..ClassifierConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn paired_run(seed: u64) -> Paired {
    let ds =
        generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(50, 100 + seed)).unwrap();
    let cfg = paired_config();
    let on = run_experiment(&ds, &cfg, seed, "acceptance", &Sequential).unwrap();
    let off = run_experiment(
        &ds,
        &ExperimentConfig {
            augmentation: false,
            ..cfg
        },
        seed,
        "acceptance",
        &Sequential,
    )
    .unwrap();
    let raw_graphs: Vec<Graph> = on.raws.iter().map(|r| r.graph.clone()).collect();
    let raw = quality(
        &on.dataset,
        &on.dataset.split.train,
        &on.raws,
        &raw_graphs,
        on.reference.as_ref().unwrap(),
    )
    .unwrap();
    let r = &on.report;
    Paired {
        f1_on: r.f1,
        f1_off: off.report.f1,
        realism_raw: raw.realism,
        realism_ref: r.realism.unwrap(),
        sparsity_raw: raw.sparsity,
        sparsity_ref: r.sparsity.unwrap(),
        validity_raw: raw.validity,
        validity_ref: r.validity.unwrap(),
    }
}

fn c7_c8_c9() -> (Outcome, Outcome, Outcome) {
    let t = Instant::now();
    let runs: Vec<Paired> = (0..SEEDS).map(paired_run).collect();
    let secs = t.elapsed().as_secs_f64();
    let m = |f: fn(&Paired) -> f64| mean(&runs.iter().map(f).collect::<Vec<_>>());
    let (rr, rf) = (m(|p| p.realism_raw), m(|p| p.realism_ref));
    let (sr, sf) = (m(|p| p.sparsity_raw), m(|p| p.sparsity_ref));
    let (on, off) = (m(|p| p.f1_on), m(|p| p.f1_off));
    let (vr, vf) = (m(|p| p.validity_raw), m(|p| p.validity_ref));
    let o7 = report(
        7,
        "quality ordering",
        rf < rr && sf < sr,
        format!("realism refined {rf:.3} vs raw {rr:.3}; sparsity refined {sf:.3} vs raw {sr:.3}; {SEEDS} seeds"),
        secs,
    );
    let o8 = report(
        8,
        "augmentation helps",
        on - off >= 0.02 && on >= 0.85 && secs < 900.0,
        format!(
            "F1 on {on:.3} off {off:.3} (delta {:.3}); {SEEDS} paired seeds",
            on - off
        ),
        secs,
    );
    let o9 = report(
        9,
        "validity",
        vf >= 0.8 && vf > vr,
        format!("refined {vf:.3} vs raw {vr:.3} (threshold 0.8)"),
        secs,
    );
    (o7, o8, o9)
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_motifcar"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

const CLI_CONFIG: &str = r#"
seed = 7
output_dir = "run"

[dataset]
kind = "planted"
graphs_per_class = 12

[experiment]
keep_fraction = 1.0
graphon_k = 4

[experiment.gan]
steps = 30
hidden_dim = 8
learning_rate = 0.01
batch_size = 100

[experiment.classifier]
epochs = 20
hidden_dim = 8
"#;

fn c10() -> Outcome {
    timed(10, "CLI determinism", || {
        let root = tempfile::tempdir().unwrap();
        let steps: &[(&str, &[&str], &[&str])] = &[
            (
                "synth",
                &["--config", "c.toml", "synth", "--out", "data.ds"],
                &["data.ds"],
            ),
            (
                "estimate-graphon",
                &[
                    "--config",
                    "c.toml",
                    "estimate-graphon",
                    "--dataset",
                    "data.ds",
                    "--out",
                    "w.txt",
                ],
                &["w.txt"],
            ),
            (
                "produce",
                &[
                    "--config",
                    "c.toml",
                    "produce",
                    "--dataset",
                    "data.ds",
                    "--graphons",
                    "w.txt",
                    "--out-dir",
                    "prod",
                ],
                &["prod/dataset.ds", "prod/raw.ds", "prod/manifest.csv"],
            ),
            (
                "refine",
                &[
                    "--config",
                    "c.toml",
                    "refine",
                    "--dataset",
                    "prod/dataset.ds",
                    "--graphons",
                    "w.txt",
                    "--raw-dir",
                    "prod",
                    "--out-dir",
                    "ref",
                ],
                &[
                    "ref/counterfactuals.ds",
                    "ref/trace_class0.csv",
                    "ref/trace_class1.csv",
                    "ref/gan_class0.json",
                ],
            ),
            (
                "train",
                &[
                    "--config",
                    "c.toml",
                    "train",
                    "--dataset",
                    "prod/dataset.ds",
                    "--counterfactuals",
                    "ref/counterfactuals.ds",
                    "--out",
                    "model.json",
                ],
                &["model.json"],
            ),
            (
                "evaluate",
                &[
                    "--config",
                    "c.toml",
                    "evaluate",
                    "--dataset",
                    "prod/dataset.ds",
                    "--model",
                    "model.json",
                    "--out",
                    "eval.json",
                ],
                &["eval.json"],
            ),
            (
                "pipeline",
                &["--config", "c.toml", "pipeline"],
                &[
                    "run/metrics.json",
                    "run/counterfactuals.ds",
                    "run/classifier.json",
                    "run/summary.txt",
                ],
            ),
            (
                "gradcheck",
                &["gradcheck", "--points", "3", "--out", "gc.txt"],
                &["gc.txt"],
            ),
        ];
        let dirs = [root.path().join("a"), root.path().join("b")];
        for d in &dirs {
            fs::create_dir_all(d).unwrap();
            fs::write(d.join("c.toml"), CLI_CONFIG).unwrap();
        }
        let mut problems = Vec::new();
        for (name, args, outputs) in steps {
            for d in &dirs {
                if let Err(e) = run_cli(d, args) {
                    problems.push(format!("{name} failed: {e}"));
                }
            }
            for o in *outputs {
                let a = fs::read(dirs[0].join(o));
                let b = fs::read(dirs[1].join(o));
                match (a, b) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (Ok(_), Ok(_)) => problems.push(format!("{name}: {o} differs")),
                    _ => problems.push(format!("{name}: {o} missing")),
                }
            }
        }
        let n = steps.len();
        (
            problems.is_empty(),
            if problems.is_empty() {
                format!("{n} subcommands byte-identical")
            } else {
                problems.join("; ")
            },
        )
    })
}

fn main() {
    // Command-line arguments (libtest flags, filters) are ignored.
    let t = Instant::now();
    let mut results = vec![c1(), c2(), c3(), c4()];
    let (o5, o6) = c5_c6();
    results.extend([o5, o6]);
    let (o7, o8, o9) = c7_c8_c9();
    results.extend([o7, o8, o9]);
    results.push(c10());
    let passed = results.iter().filter(|o| o.passed).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1} s",
        results.len(),
        t.elapsed().as_secs_f64()
    );
    let unexpected: Vec<u32> = results
        .iter()
        .filter(|o| !o.passed && !KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let fixed: Vec<u32> = results
        .iter()
        .filter(|o| o.passed && KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    if !fixed.is_empty() {
        println!("acceptance: criteria {fixed:?} are listed as known failures but now pass");
    }
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
