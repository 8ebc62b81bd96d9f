//! End-to-end experiment on an in-memory dataset: downsample, split,
//! estimate class graphons, produce and refine counterfactuals, train the
//! classifier and score everything.
//!
//! Every stage that learns from data receives training indices only and
//! checks them against the split before use.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::detector::{predict, train_classifier, ClassifierConfig, ClassifierModel, NORMAL};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabeledDataset, Split};
use crate::graphon::{default_resolution, estimate_graphon, Graphon};
use crate::metrics::{
    detection_metrics, graph_feature_vector, proximity_score, realism_score, sparsity_score,
    validity_score, MetricsReport, SparsityPair, DEFAULT_HISTOGRAM_BUCKETS,
};
use crate::optimizer::train::{train_gan, GanOutcome, RefineTarget, TraceRow, TrainConfig};
use crate::producer::{plan_pairs, produce_pair, PlannedPair, ProducerConfig, RawCounterfactual};
use crate::rng;

/// Which classes get a refinement GAN.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GanScope {
    /// One GAN per class, each trained on that class's real graphs.
    #[default]
    PerClass,
    /// Only normal-class counterfactuals are refined; the others are used raw.
    NormalOnly,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ExperimentConfig {
    /// Original class id designated anomalous.
    pub anomaly_class: usize,
    /// Fraction of the anomalous class kept.
    pub keep_fraction: f64,
    /// Train / validation / test weights.
    pub split: [f64; 3],
    /// Graphon resolution; mean node count of the group when absent.
    pub graphon_k: Option<usize>,
    /// Graphons per class. Above 1, each class's training graphs are split
    /// by k-means on their feature vectors and every cluster gets its own
    /// graphon.
    pub graphon_clusters: usize,
    pub augmentation: bool,
    /// Refine raw counterfactuals before training on them.
    pub refine: bool,
    pub gan_scope: GanScope,
    pub producer: ProducerConfig,
    pub gan: TrainConfig,
    pub classifier: ClassifierConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            anomaly_class: 0,
            keep_fraction: 0.1,
            split: [2.0, 4.0, 4.0],
            graphon_k: None,
            graphon_clusters: 1,
            augmentation: true,
            refine: true,
            gan_scope: GanScope::PerClass,
            producer: ProducerConfig::default(),
            gan: TrainConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::config(format!(
                "keep_fraction {} not in (0, 1]",
                self.keep_fraction
            )));
        }
        if self.split.iter().any(|r| *r < 0.0 || !r.is_finite())
            || self.split[0] <= 0.0
            || self.split[2] <= 0.0
        {
            return Err(Error::config(
                "split needs non-negative weights with positive train and test parts",
            ));
        }
        if self.graphon_k == Some(0) {
            return Err(Error::config("graphon_k must be positive"));
        }
        if self.graphon_clusters == 0 {
            return Err(Error::config("graphon_clusters must be positive"));
        }
        self.gan.validate()?;
        self.classifier.validate()
    }
}

/// Runs independent work items, returning results in index order.
pub trait Executor {
    fn map<R: Send, F: Fn(usize) -> R + Sync>(&self, n: usize, f: F) -> Vec<R>;
}

/// Runs items one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R: Send, F: Fn(usize) -> R + Sync>(&self, n: usize, f: F) -> Vec<R> {
        (0..n).map(f).collect()
    }
}

/// Receives intermediate results as soon as their stage finishes, so a
/// failing run still leaves its earlier artifacts behind.
pub trait Sink {
    fn dataset(&mut self, _ds: &LabeledDataset) {}
    fn graphons(&mut self, _graphons: &[(usize, Graphon)]) {}
    fn raws(&mut self, _raws: &[RawCounterfactual], _skipped: &[(usize, String)]) {}
    fn trace(&mut self, _class: usize, _trace: &[TraceRow]) {}
    /// Training counterfactuals, aligned with the raws.
    fn counterfactuals(&mut self, _raws: &[RawCounterfactual], _cfs: &[Graph]) {}
    fn classifier(&mut self, _model: &ClassifierModel) {}
}

/// Discards everything.
impl Sink for () {}

/// Everything a run produced, for reporting and debugging.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: MetricsReport,
    /// Dataset after downsampling and splitting.
    pub dataset: LabeledDataset,
    /// Graphons keyed by group; see [`graphon_groups`].
    pub graphons: Vec<(usize, Graphon)>,
    /// Group of every graph in `dataset`.
    pub groups: Vec<Option<usize>>,
    pub raws: Vec<RawCounterfactual>,
    /// Counterfactuals used for training (refined where a GAN ran), aligned
    /// with `raws`.
    pub counterfactuals: Vec<Graph>,
    pub traces: Vec<(usize, Vec<TraceRow>)>,
    pub skipped: Vec<(usize, String)>,
    pub classifier: ClassifierModel,
    /// Real-data-only classifier used for validity.
    pub reference: Option<ClassifierModel>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Fails unless every index is a training index.
pub fn assert_training_only(split: &Split, ids: &[usize], what: &str) -> Result<()> {
    if let Some(bad) = ids.iter().find(|i| split.train.binary_search(i).is_err()) {
        return Err(Error::Leakage(format!(
            "{what} received non-training graph {bad}"
        )));
    }
    Ok(())
}

/// Downsampled and split copy of `ds`.
pub fn prepare_dataset(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<LabeledDataset> {
    let mut out = stage(
        "downsample",
        ds.downsample_anomalies(
            cfg.anomaly_class,
            cfg.keep_fraction,
            rng::derive_seed(seed, "downsample", 0),
        ),
    )?;
    stage(
        "split",
        out.resplit(cfg.split, rng::derive_seed(seed, "split", 0)),
    )?;
    let mut train = out.split.train.clone();
    train.sort_unstable();
    out.split.train = train;
    Ok(out)
}

/// Graphon group of every graph: `class * clusters + cluster` for training
/// graphs, `None` for the rest. With one cluster the group is the class id.
pub fn graphon_groups(ds: &LabeledDataset, clusters: usize) -> Vec<Option<usize>> {
    let clusters = clusters.max(1);
    let mut groups = vec![None; ds.len()];
    for class in ds.classes() {
        let ids: Vec<usize> = ds
            .split
            .train
            .iter()
            .copied()
            .filter(|&i| ds.labels[i] == class)
            .collect();
        let features: Vec<Vec<f64>> = ids
            .iter()
            .map(|&i| graph_feature_vector(&ds.graphs[i], DEFAULT_HISTOGRAM_BUCKETS))
            .collect();
        for (&i, c) in ids.iter().zip(kmeans(&features, clusters)) {
            groups[i] = Some(class * clusters + c);
        }
    }
    groups
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from farthest-point seeds (first point first); ties go
/// to the lower cluster. Deterministic, no RNG.
fn kmeans(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    if points.is_empty() || k <= 1 {
        return vec![0; points.len()];
    }
    let mut centers = vec![points[0].clone()];
    while centers.len() < k.min(points.len()) {
        let far = (0..points.len())
            .map(|i| {
                (
                    i,
                    centers
                        .iter()
                        .map(|c| dist2(&points[i], c))
                        .fold(f64::INFINITY, f64::min),
                )
            })
            .fold(
                (0, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if far.1 <= 0.0 {
            break;
        }
        centers.push(points[far.0].clone());
    }
    let nearest = |p: &[f64], centers: &[Vec<f64>]| {
        (0..centers.len()).fold(0, |best, c| {
            if dist2(p, &centers[c]) < dist2(p, &centers[best]) {
                c
            } else {
                best
            }
        })
    };
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..KMEANS_ITERATIONS {
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assign)
                .filter(|(_, a)| **a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for (d, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

const KMEANS_ITERATIONS: usize = 50;

/// One graphon per non-empty group, from training graphs only.
pub fn group_graphons(
    ds: &LabeledDataset,
    groups: &[Option<usize>],
    k: Option<usize>,
) -> Result<Vec<(usize, Graphon)>> {
    let mut ids_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        if let Some(g) = g {
            ids_of.entry(*g).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    for (group, ids) in ids_of {
        assert_training_only(&ds.split, &ids, "graphon estimation")?;
        let graphs: Vec<Graph> = ids.iter().map(|&i| ds.graphs[i].clone()).collect();
        let k = k.unwrap_or_else(|| default_resolution(&graphs));
        out.push((group, estimate_graphon(&graphs, Some(k))?));
    }
    Ok(out)
}

/// Per-class graphons from training graphs only.
pub fn class_graphons(ds: &LabeledDataset, k: Option<usize>) -> Result<Vec<(usize, Graphon)>> {
    group_graphons(ds, &graphon_groups(ds, 1), k)
}

fn graphon_for(graphons: &[(usize, Graphon)], group: usize) -> Option<&Graphon> {
    graphons.iter().find(|(c, _)| *c == group).map(|(_, w)| w)
}

/// Graphon of graph `id` under `groups`.
fn graphon_of<'a>(
    graphons: &'a [(usize, Graphon)],
    groups: &[Option<usize>],
    id: usize,
) -> Option<&'a Graphon> {
    groups
        .get(id)
        .copied()
        .flatten()
        .and_then(|g| graphon_for(graphons, g))
}

/// Produces raw counterfactuals from training graphs only, each donor using
/// the graphon of its group. Pairs that cannot be produced are returned with
/// their error; argument errors abort.
pub fn produce_counterfactuals<E: Executor>(
    ds: &LabeledDataset,
    train_ids: &[usize],
    graphons: &[(usize, Graphon)],
    groups: &[Option<usize>],
    cfg: &ProducerConfig,
    seed: u64,
    exec: &E,
) -> Result<(Vec<RawCounterfactual>, Vec<(usize, Error)>)> {
    assert_training_only(&ds.split, train_ids, "counterfactual production")?;
    let k_of = |i: usize| graphon_of(graphons, groups, i).map(Graphon::k);
    let pairs: Vec<PlannedPair> = plan_pairs(
        ds,
        train_ids,
        &k_of,
        cfg,
        rng::derive_seed(seed, "pairs", 0),
    );
    let results = exec.map(pairs.len(), |i| {
        let lookup = |id: usize| graphon_of(graphons, groups, id).cloned();
        produce_pair(ds, &pairs[i], &lookup, cfg)
    });
    let mut raws = Vec::new();
    let mut skipped = Vec::new();
    for (p, r) in pairs.iter().zip(results) {
        match r {
            Ok(raw) => raws.push(raw),
            Err(e @ Error::Argument(_)) => return Err(e),
            Err(e) => skipped.push((p.g_id, e)),
        }
    }
    Ok((raws, skipped))
}

/// One class's refinement: indices into the raw list and the GAN result
/// aligned with them.
#[derive(Debug, Clone)]
pub struct ClassRefinement {
    pub class: usize,
    pub members: Vec<usize>,
    pub gan: GanOutcome,
}

/// Trains one GAN per class (or only for the normal class, per
/// `cfg.gan_scope`) on that class's real training graphs.
pub fn refine_counterfactuals<E: Executor>(
    ds: &LabeledDataset,
    train_ids: &[usize],
    graphons: &[(usize, Graphon)],
    groups: &[Option<usize>],
    raws: &[RawCounterfactual],
    cfg: &ExperimentConfig,
    seed: u64,
    exec: &E,
) -> Vec<Result<ClassRefinement>> {
    let classes: Vec<usize> = ds
        .classes()
        .into_iter()
        .filter(|&c| cfg.gan_scope == GanScope::PerClass || c == NORMAL)
        .filter(|&c| raws.iter().any(|r| r.label() == c))
        .collect();
    exec.map(classes.len(), |ci| {
        let class = classes[ci];
        let members: Vec<usize> = (0..raws.len())
            .filter(|&r| raws[r].label() == class)
            .collect();
        let real_ids: Vec<usize> = train_ids
            .iter()
            .copied()
            .filter(|&i| ds.labels[i] == class)
            .collect();
        assert_training_only(&ds.split, &real_ids, "GAN refinement")?;
        let reals: Vec<Graph> = real_ids.iter().map(|&i| ds.graphs[i].clone()).collect();
        if reals.is_empty() {
            return Err(Error::Producer(format!(
                "class {class} has no training graphs"
            )));
        }
        let k = cfg.graphon_k.unwrap_or_else(|| default_resolution(&reals));
        let mut targets = Vec::with_capacity(members.len());
        for &r in &members {
            let raw = &raws[r];
            let h_id = raw.provenance.h_id;
            if h_id >= ds.len() {
                return Err(Error::arg(format!(
                    "context donor {h_id} is not in the dataset"
                )));
            }
            let wh = graphon_of(graphons, groups, h_id)
                .ok_or_else(|| Error::Producer(format!("no graphon for context donor {h_id}")))?;
            targets.push(RefineTarget::from_context_donor(
                raw.clone(),
                &ds.graphs[h_id],
                wh,
            ));
        }
        let mut gan = cfg.gan.clone();
        gan.seed = rng::derive_seed(seed, "gan", class as u64);
        let out = train_gan(&targets, &reals, k, &gan)?;
        Ok(ClassRefinement {
            class,
            members,
            gan: out,
        })
    })
}

/// Runs the full experiment with a fixed `seed`.
pub fn run_experiment<E: Executor>(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    config_hash: &str,
    exec: &E,
) -> Result<ExperimentOutcome> {
    run_experiment_with(ds, cfg, seed, config_hash, exec, &mut ())
}

/// [`run_experiment`] reporting intermediate results to `sink`.
pub fn run_experiment_with<E: Executor>(
    ds: &LabeledDataset,
    cfg: &ExperimentConfig,
    seed: u64,
    config_hash: &str,
    exec: &E,
    sink: &mut dyn Sink,
) -> Result<ExperimentOutcome> {
    stage("config", cfg.validate())?;
    let ds = prepare_dataset(ds, cfg, seed)?;
    sink.dataset(&ds);
    let split = ds.split.clone();
    let train_ids = split.train.clone();
    let train_set = ds.subset(&train_ids);
    let val_set = ds.subset(&split.validation);

    let mut clf_cfg = cfg.classifier.clone();
    clf_cfg.seed = rng::derive_seed(seed, "classifier", 0);

    let mut graphons = Vec::new();
    let mut groups = Vec::new();
    let mut raws = Vec::new();
    let mut counterfactuals = Vec::new();
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    let mut reference = None;

    if cfg.augmentation {
        groups = graphon_groups(&ds, cfg.graphon_clusters);
        graphons = stage("graphon", group_graphons(&ds, &groups, cfg.graphon_k))?;
        sink.graphons(&graphons);
        let (produced, failed) = stage(
            "produce",
            produce_counterfactuals(
                &ds,
                &train_ids,
                &graphons,
                &groups,
                &cfg.producer,
                seed,
                exec,
            ),
        )?;
        raws = produced;
        skipped = failed
            .into_iter()
            .map(|(g, e)| (g, alloc::string::ToString::to_string(&e)))
            .collect();
        sink.raws(&raws, &skipped);
        counterfactuals = raws.iter().map(|r| r.graph.clone()).collect();

        if cfg.refine && !raws.is_empty() {
            let runs =
                refine_counterfactuals(&ds, &train_ids, &graphons, &groups, &raws, cfg, seed, exec);
            for run in runs {
                let run = stage("refine", run)?;
                for (&m, g) in run.members.iter().zip(&run.gan.refined) {
                    counterfactuals[m] = g.clone();
                }
                sink.trace(run.class, &run.gan.trace);
                traces.push((run.class, run.gan.trace));
            }
        }
        sink.counterfactuals(&raws, &counterfactuals);
        if !raws.is_empty() {
            reference = Some(stage(
                "reference",
                train_classifier(&train_set, &val_set, &clf_cfg),
            )?);
        }
    }

    let mut training = train_set.clone();
    training.extend(
        counterfactuals
            .iter()
            .cloned()
            .zip(raws.iter().map(RawCounterfactual::label)),
    );
    let classifier = stage(
        "classifier",
        train_classifier(&training, &val_set, &clf_cfg),
    )?;
    sink.classifier(&classifier);

    let test = ds.subset(&split.test);
    let predicted: Vec<usize> = test
        .iter()
        .map(|(g, _)| predict(&classifier, g).1)
        .collect();
    let actual: Vec<usize> = test.iter().map(|(_, l)| *l).collect();
    let det = stage(
        "evaluate",
        detection_metrics(&predicted, &actual, clf_cfg.positive_class),
    )?;

    let mut report = MetricsReport {
        dataset: ds.name.clone(),
        seed,
        config_hash: config_hash.into(),
        augmentation: cfg.augmentation,
        precision: det.precision,
        recall: det.recall,
        f1: det.f1,
        realism: None,
        validity: None,
        proximity: None,
        sparsity: None,
        counterfactuals: raws.len(),
        skipped_pairs: skipped.len(),
    };
    if let (false, Some(reference)) = (raws.is_empty(), reference.as_ref()) {
        let q = stage(
            "metrics",
            quality(&ds, &train_ids, &raws, &counterfactuals, reference),
        )?;
        report.realism = Some(q.realism);
        report.validity = Some(q.validity);
        report.proximity = Some(q.proximity);
        report.sparsity = Some(q.sparsity);
    }
    stage("metrics", report.validate())?;
    Ok(ExperimentOutcome {
        report,
        dataset: ds,
        graphons,
        groups,
        raws,
        counterfactuals,
        traces,
        skipped,
        classifier,
        reference,
    })
}

/// The four counterfactual quality scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quality {
    pub realism: f64,
    pub validity: f64,
    pub proximity: f64,
    pub sparsity: f64,
}

/// Scores `cfs` (laid out like `raws`) against the real training graphs and
/// their motif donors.
pub fn quality(
    ds: &LabeledDataset,
    train_ids: &[usize],
    raws: &[RawCounterfactual],
    cfs: &[Graph],
    reference: &ClassifierModel,
) -> Result<Quality> {
    let real: Vec<Graph> = train_ids.iter().map(|&i| ds.graphs[i].clone()).collect();
    let realism = realism_score(&real, cfs)?;
    let pairs: Vec<(&Graph, &Graph)> = cfs
        .iter()
        .zip(raws)
        .map(|(g, r)| (g, &ds.graphs[r.provenance.g_id]))
        .collect();
    let proximity = proximity_score(&pairs)?;
    let sp: Vec<SparsityPair<'_>> = cfs
        .iter()
        .zip(raws)
        .map(|(g, r)| SparsityPair {
            cf: g,
            scaffold: r,
            source: &ds.graphs[r.provenance.g_id],
        })
        .collect();
    let sparsity = sparsity_score(&sp)?;
    let labelled: Vec<(&Graph, usize)> =
        cfs.iter().zip(raws).map(|(g, r)| (g, r.label())).collect();
    let validity = validity_score(&labelled, reference)?;
    Ok(Quality {
        realism,
        validity,
        proximity,
        sparsity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_planted_motif_dataset, PlantedMotifConfig};

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            keep_fraction: 1.0,
            graphon_k: Some(4),
            gan: TrainConfig {
                steps: 3,
                hidden_dim: 8,
                ..TrainConfig::default()
            },
            classifier: ClassifierConfig {
                epochs: 3,
                hidden_dim: 8,
                ..ClassifierConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn leakage_guard_rejects_test_ids() {
        let split = Split {
            train: alloc::vec![0, 2],
            validation: alloc::vec![1],
            test: alloc::vec![3],
        };
        assert!(assert_training_only(&split, &[0, 2], "x").is_ok());
        assert!(matches!(
            assert_training_only(&split, &[3], "x"),
            Err(Error::Leakage(_))
        ));
    }

    #[test]
    fn small_run_is_deterministic_and_leak_free() {
        let ds = generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(10, 3)).unwrap();
        let a = run_experiment(&ds, &small_cfg(), 5, "h", &Sequential).unwrap();
        let b = run_experiment(&ds, &small_cfg(), 5, "h", &Sequential).unwrap();
        assert_eq!(a.report, b.report);
        assert!(a.report.realism.is_some());
        for raw in &a.raws {
            assert!(a.dataset.split.train.contains(&raw.provenance.g_id));
            assert!(a.dataset.split.train.contains(&raw.provenance.h_id));
            assert_eq!(raw.label(), a.dataset.labels[raw.provenance.g_id]);
        }
    }

    #[test]
    fn ablation_skips_production() {
        let ds = generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(10, 3)).unwrap();
        let cfg = ExperimentConfig {
            augmentation: false,
            ..small_cfg()
        };
        let out = run_experiment(&ds, &cfg, 5, "h", &Sequential).unwrap();
        assert!(out.raws.is_empty() && out.report.realism.is_none());
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let ds = generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(4, 3)).unwrap();
        let cfg = ExperimentConfig {
            anomaly_class: 7,
            ..small_cfg()
        };
        let err = run_experiment(&ds, &cfg, 5, "h", &Sequential).unwrap_err();
        assert_eq!(err.stage(), Some("downsample"));
    }

    #[test]
    fn one_cluster_groups_by_class() {
        let ds = generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(6, 1)).unwrap();
        let ds = prepare_dataset(&ds, &small_cfg(), 2).unwrap();
        let groups = graphon_groups(&ds, 1);
        for i in 0..ds.len() {
            let expected = ds.split.train.contains(&i).then_some(ds.labels[i]);
            assert_eq!(groups[i], expected);
        }
    }

    #[test]
    fn kmeans_separates_two_sizes() {
        use crate::graph::named;
        let mut graphs = Vec::new();
        for n in [5, 20, 6, 21, 5, 22] {
            graphs.push(named::cycle(n));
        }
        let ds =
            LabeledDataset::new("k", graphs, alloc::vec![0; 6], 0, Split::all_train(6)).unwrap();
        let groups = graphon_groups(&ds, 2);
        assert_eq!(groups, [0, 1, 0, 1, 0, 1].map(Some).to_vec());
        let w = group_graphons(&ds, &groups, None).unwrap();
        assert_eq!(
            w.iter().map(|(g, w)| (*g, w.k())).collect::<Vec<_>>(),
            [(0, 5), (1, 21)]
        );
    }

    #[test]
    fn clustered_run_completes() {
        let ds = generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(10, 3)).unwrap();
        let cfg = ExperimentConfig {
            graphon_clusters: 2,
            ..small_cfg()
        };
        let out = run_experiment(&ds, &cfg, 5, "h", &Sequential).unwrap();
        assert!(out.graphons.len() > 2);
        assert!(!out.raws.is_empty());
        for raw in &out.raws {
            assert!(out.groups[raw.provenance.g_id].is_some());
        }
    }
}
