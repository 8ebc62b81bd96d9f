//! Dataset loading and the end-to-end pipeline driver.

use std::path::{Path, PathBuf};

use motifcar_core::detector::ClassifierModel;
use motifcar_core::metrics::MetricsReport;
use motifcar_core::optimizer::TraceRow;
use motifcar_core::pipeline::{run_experiment_with, Executor, ExperimentOutcome, Sequential, Sink};
use motifcar_core::producer::RawCounterfactual;
use motifcar_core::rng::derive_seed;
use motifcar_core::synth::generate_planted_motif_dataset;
use motifcar_core::{Graph, Graphon, LabeledDataset, Split};
use rayon::prelude::*;

use crate::config::{DatasetSource, RunConfig};
use crate::error::{Error, Result};
use crate::{formats, store, tu};

/// Runs work items on a dedicated rayon pool; results keep index order.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
        Ok(Parallel { pool })
    }
}

impl Executor for Parallel {
    fn map<R: Send, F: Fn(usize) -> R + Sync>(&self, n: usize, f: F) -> Vec<R> {
        let f = &f;
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Loaded dataset and any repair warnings.
pub struct Loaded {
    pub dataset: LabeledDataset,
    pub warnings: Vec<String>,
}

/// Materializes the configured dataset. Generated data uses a seed derived
/// from `seed` unless the source pins one.
pub fn load_dataset(source: &DatasetSource, seed: u64) -> Result<Loaded> {
    match source {
        DatasetSource::Planted(p) => {
            let cfg = p.to_config(derive_seed(seed, "synth", 0))?;
            Ok(Loaded {
                dataset: generate_planted_motif_dataset(&cfg)?,
                warnings: Vec::new(),
            })
        }
        DatasetSource::Tu { dir, name } => {
            let (dataset, report) = tu::load(dir, name)?;
            Ok(Loaded {
                dataset,
                warnings: report.warnings(),
            })
        }
        DatasetSource::File { path } => Ok(Loaded {
            dataset: store::load(path)?,
            warnings: Vec::new(),
        }),
    }
}

/// Standard file names inside an output directory.
pub mod paths {
    pub const DATASET: &str = "dataset.ds";
    pub const GRAPHONS: &str = "graphons.txt";
    pub const RAW: &str = "raw.ds";
    pub const MANIFEST: &str = "manifest.csv";
    pub const COUNTERFACTUALS: &str = "counterfactuals.ds";
    pub const CLASSIFIER: &str = "classifier.json";
    pub const METRICS: &str = "metrics.json";
    pub const SUMMARY: &str = "summary.txt";
    pub const CONFIG: &str = "config.toml";

    pub fn trace(class: usize) -> String {
        format!("trace_class{class}.csv")
    }
}

/// Dataset holding counterfactual graphs with their inherited labels.
pub fn counterfactual_dataset(
    name: &str,
    raws: &[RawCounterfactual],
    graphs: &[Graph],
) -> Result<LabeledDataset> {
    let labels: Vec<usize> = raws.iter().map(RawCounterfactual::label).collect();
    let anomaly = labels.iter().copied().min().unwrap_or(0);
    let ds = LabeledDataset::new(
        name,
        graphs.to_vec(),
        labels,
        anomaly,
        Split::all_train(graphs.len()),
    )?;
    Ok(ds)
}

/// Writes each intermediate result to the output directory as soon as it
/// exists. The first write failure is kept and reported at the end.
struct FileSink<'a> {
    dir: &'a Path,
    error: Option<Error>,
}

impl FileSink<'_> {
    fn keep(&mut self, r: Result<()>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

impl Sink for FileSink<'_> {
    fn dataset(&mut self, ds: &LabeledDataset) {
        let r = store::save(ds, &self.path(paths::DATASET));
        self.keep(r);
    }

    fn graphons(&mut self, graphons: &[(usize, Graphon)]) {
        let r = formats::save_graphons(graphons, &self.path(paths::GRAPHONS));
        self.keep(r);
    }

    fn raws(&mut self, raws: &[RawCounterfactual], _skipped: &[(usize, String)]) {
        let graphs: Vec<Graph> = raws.iter().map(|r| r.graph.clone()).collect();
        let r = counterfactual_dataset("raw", raws, &graphs)
            .and_then(|ds| store::save(&ds, &self.path(paths::RAW)))
            .and_then(|_| formats::save_manifest(raws, &self.path(paths::MANIFEST)));
        self.keep(r);
    }

    fn trace(&mut self, class: usize, trace: &[TraceRow]) {
        let r = formats::save_trace(trace, &self.path(&paths::trace(class)));
        self.keep(r);
    }

    fn counterfactuals(&mut self, raws: &[RawCounterfactual], cfs: &[Graph]) {
        let r = counterfactual_dataset("counterfactuals", raws, cfs)
            .and_then(|ds| store::save(&ds, &self.path(paths::COUNTERFACTUALS)));
        self.keep(r);
    }

    fn classifier(&mut self, model: &ClassifierModel) {
        let ck = formats::Checkpoint::Classifier {
            version: formats::CHECKPOINT_VERSION,
            model: model.clone(),
        };
        let r = formats::save_json(&ck, &self.path(paths::CLASSIFIER));
        self.keep(r);
    }
}

/// Result of [`run_pipeline`].
pub struct PipelineRun {
    pub report: MetricsReport,
    pub outcome: ExperimentOutcome,
    pub warnings: Vec<String>,
}

/// Load, run every stage and write all artifacts into `cfg.output_dir`.
///
/// A failing stage aborts the run with its name; artifacts of the stages
/// that finished stay on disk together with a summary naming the failure.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    formats::write_text(&dir.join(paths::CONFIG), &cfg.to_toml())?;
    let fail = |e: Error| {
        let _ = formats::write_text(&dir.join(paths::SUMMARY), &format!("failed: {e}\n"));
        e
    };
    let loaded = load_dataset(&cfg.dataset, cfg.seed).map_err(|e| fail(e.in_stage("load")))?;
    let mut sink = FileSink { dir, error: None };
    let hash = cfg.hash();
    let result = if cfg.jobs > 1 {
        let exec = Parallel::new(cfg.jobs)?;
        run_experiment_with(
            &loaded.dataset,
            &cfg.experiment,
            cfg.seed,
            &hash,
            &exec,
            &mut sink,
        )
    } else {
        run_experiment_with(
            &loaded.dataset,
            &cfg.experiment,
            cfg.seed,
            &hash,
            &Sequential,
            &mut sink,
        )
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return Err(fail(e.into())),
    };
    if let Some(e) = sink.error {
        return Err(e.in_stage("write"));
    }
    let report = outcome.report.clone();
    let mut notes = loaded.warnings.clone();
    for (g, reason) in &outcome.skipped {
        notes.push(format!("skipped motif donor {g}: {reason}"));
    }
    formats::save_metrics(&report, &dir.join(paths::METRICS))?;
    formats::append_ledger(&report, &cfg.ledger_path())?;
    formats::write_text(
        &dir.join(paths::SUMMARY),
        &formats::summary_text(&report, &notes),
    )?;
    Ok(PipelineRun {
        report,
        outcome,
        warnings: loaded.warnings,
    })
}
