//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use motifcar_core::detector::{predict, train_classifier, ClassifierConfig};
use motifcar_core::gradcheck::{run_gradcheck, GradcheckConfig, GradcheckReport};
use motifcar_core::metrics::{detection_metrics, MetricsReport};
use motifcar_core::pipeline::{
    graphon_groups, group_graphons, prepare_dataset, produce_counterfactuals,
    refine_counterfactuals, Executor, Sequential,
};
use motifcar_core::producer::RawCounterfactual;
use motifcar_core::rng::derive_seed;
use motifcar_core::{Graph, Graphon, LabeledDataset};

use crate::config::{DatasetSource, RunConfig};
use crate::error::{Error, Result};
use crate::run::{counterfactual_dataset, load_dataset, paths, run_pipeline, Parallel};
use crate::{formats, store, tu};

#[derive(Debug, Parser)]
#[command(
    name = "motifcar",
    version,
    about = "Motif-consistent counterfactual augmentation for graph anomaly detection"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set experiment.gan.steps=100`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed (config key `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (config key `jobs`).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the configured planted-motif dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Write the benchmark text layout into the directory `out`.
        #[arg(long)]
        tu: bool,
    },
    /// Estimate one graphon per class (or per cluster) from training graphs.
    EstimateGraphon {
        #[command(flatten)]
        data: DataArg,
        /// Resolution (config key `experiment.graphon_k`).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce raw counterfactuals from training graphs.
    Produce {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        graphons: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Refine raw counterfactuals with the adversarial generator.
    Refine {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        graphons: PathBuf,
        /// Output directory of `produce`.
        #[arg(long)]
        raw_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the anomaly classifier on training graphs plus counterfactuals.
    Train {
        #[command(flatten)]
        data: DataArg,
        /// Counterfactual dataset files to add to the training set.
        #[arg(long)]
        counterfactuals: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained classifier on the test split.
    Evaluate {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Pipeline {
        /// Output directory (config key `output_dir`).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check every analytic gradient against central differences.
    Gradcheck {
        #[arg(long, default_value_t = motifcar_core::gradcheck::DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value_t = motifcar_core::gradcheck::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = motifcar_core::gradcheck::DEFAULT_STEP)]
        step: f64,
        /// Also write the report table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct DataArg {
    /// Dataset file, or a benchmark directory named after its files. The
    /// configured `dataset` is used when absent.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("error[usage] {}", first_line(&e.to_string()));
            return 1;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.kind();
            let stage = e.stage().map(|s| format!("stage={s} ")).unwrap_or_default();
            eprintln!("error[{}] {stage}{}", kind.tag(), first_line(&e.detail()));
            kind.exit_code()
        }
    }
}

fn first_line(s: &str) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    line.trim().trim_start_matches("error: ").to_string()
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref(), &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Command::Pipeline {
        output_dir: Some(d),
    } = &cli.command
    {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    if cli.print_config {
        formats::print(&cfg.to_toml());
        return Ok(());
    }
    match &cli.command {
        Command::Synth { out, tu: as_tu } => synth(&cfg, out, *as_tu),
        Command::EstimateGraphon { data, k, out } => estimate_graphon(&cfg, data, *k, out),
        Command::Produce {
            data,
            graphons,
            out_dir,
        } => produce(&cfg, data, graphons, out_dir),
        Command::Refine {
            data,
            graphons,
            raw_dir,
            out_dir,
        } => refine(&cfg, data, graphons, raw_dir, out_dir),
        Command::Train {
            data,
            counterfactuals,
            out,
        } => train(&cfg, data, counterfactuals, out),
        Command::Evaluate { data, model, out } => evaluate(&cfg, data, model, out),
        Command::Pipeline { .. } => {
            let run = run_pipeline(&cfg)?;
            warn_all(&run.warnings);
            formats::print(&formats::summary_text(&run.report, &[]));
            Ok(())
        }
        Command::Gradcheck {
            points,
            tolerance,
            step,
            out,
        } => gradcheck(
            GradcheckConfig {
                step: *step,
                tolerance: *tolerance,
                points: *points,
                seed: cfg.seed,
            },
            out,
        ),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn with_exec<T>(cfg: &RunConfig, f: impl FnOnce(&dyn ExecRef) -> Result<T>) -> Result<T> {
    if cfg.jobs > 1 {
        f(&Parallel::new(cfg.jobs)?)
    } else {
        f(&Sequential)
    }
}

/// Object-safe bridge so subcommands pick an executor at run time.
trait ExecRef {
    fn produce(
        &self,
        ds: &LabeledDataset,
        graphons: &[(usize, Graphon)],
        groups: &[Option<usize>],
        cfg: &RunConfig,
    ) -> motifcar_core::Result<(Vec<RawCounterfactual>, Vec<(usize, motifcar_core::Error)>)>;
    fn refine(
        &self,
        ds: &LabeledDataset,
        graphons: &[(usize, Graphon)],
        groups: &[Option<usize>],
        raws: &[RawCounterfactual],
        cfg: &RunConfig,
    ) -> Vec<motifcar_core::Result<motifcar_core::pipeline::ClassRefinement>>;
}

impl<E: Executor> ExecRef for E {
    fn produce(
        &self,
        ds: &LabeledDataset,
        graphons: &[(usize, Graphon)],
        groups: &[Option<usize>],
        cfg: &RunConfig,
    ) -> motifcar_core::Result<(Vec<RawCounterfactual>, Vec<(usize, motifcar_core::Error)>)> {
        produce_counterfactuals(
            ds,
            &ds.split.train,
            graphons,
            groups,
            &cfg.experiment.producer,
            cfg.seed,
            self,
        )
    }

    fn refine(
        &self,
        ds: &LabeledDataset,
        graphons: &[(usize, Graphon)],
        groups: &[Option<usize>],
        raws: &[RawCounterfactual],
        cfg: &RunConfig,
    ) -> Vec<motifcar_core::Result<motifcar_core::pipeline::ClassRefinement>> {
        refine_counterfactuals(
            ds,
            &ds.split.train,
            graphons,
            groups,
            raws,
            &cfg.experiment,
            cfg.seed,
            self,
        )
    }
}

/// Loads the dataset named on the command line (or configured) and, when it
/// carries no validation or test graphs yet, downsamples and splits it the
/// same way the pipeline does.
pub fn open_dataset(arg: &DataArg, cfg: &RunConfig) -> Result<LabeledDataset> {
    let source = match &arg.dataset {
        Some(p) if p.is_dir() => {
            let name = p.file_name().and_then(|n| n.to_str()).ok_or_else(|| {
                Error::Usage(format!("cannot derive a dataset name from {}", p.display()))
            })?;
            DatasetSource::Tu {
                dir: p.clone(),
                name: name.to_string(),
            }
        }
        Some(p) => DatasetSource::File { path: p.clone() },
        None => cfg.dataset.clone(),
    };
    let loaded = load_dataset(&source, cfg.seed).map_err(|e| e.in_stage("load"))?;
    warn_all(&loaded.warnings);
    let ds = loaded.dataset;
    if ds.split.validation.is_empty() && ds.split.test.is_empty() {
        return Ok(prepare_dataset(&ds, &cfg.experiment, cfg.seed)?);
    }
    Ok(ds)
}

fn synth(cfg: &RunConfig, out: &Path, as_tu: bool) -> Result<()> {
    let DatasetSource::Planted(_) = &cfg.dataset else {
        return Err(Error::Usage("synth needs a planted dataset source".into()));
    };
    let ds = load_dataset(&cfg.dataset, cfg.seed)?.dataset;
    if as_tu {
        tu::save(&ds, out, &ds.name)
    } else {
        store::save(&ds, out)
    }
}

fn estimate_graphon(cfg: &RunConfig, data: &DataArg, k: Option<usize>, out: &Path) -> Result<()> {
    let ds = open_dataset(data, cfg)?;
    let groups = graphon_groups(&ds, cfg.experiment.graphon_clusters);
    let graphons = group_graphons(&ds, &groups, k.or(cfg.experiment.graphon_k))?;
    formats::save_graphons(&graphons, out)
}

/// Graphon groups of `ds` under the configured clustering, checked against
/// the groups present in the graphon file.
fn checked_groups(
    ds: &LabeledDataset,
    graphons: &[(usize, Graphon)],
    cfg: &RunConfig,
    path: &Path,
) -> Result<Vec<Option<usize>>> {
    let groups = graphon_groups(ds, cfg.experiment.graphon_clusters);
    if let Some(g) = groups
        .iter()
        .flatten()
        .find(|g| !graphons.iter().any(|(id, _)| id == *g))
    {
        return Err(Error::format(
            path,
            0,
            format!("no graphon for group {g}; estimate graphons with the same dataset and graphon_clusters"),
        ));
    }
    Ok(groups)
}

fn produce(cfg: &RunConfig, data: &DataArg, graphons: &Path, out_dir: &Path) -> Result<()> {
    let ds = open_dataset(data, cfg)?;
    let path = graphons;
    let graphons = formats::load_graphons(path)?;
    let groups = checked_groups(&ds, &graphons, cfg, path)?;
    let (raws, skipped) = with_exec(cfg, |e| Ok(e.produce(&ds, &graphons, &groups, cfg)?))?;
    for (g, e) in &skipped {
        eprintln!("warning: skipped motif donor {g}: {e}");
    }
    let graphs: Vec<Graph> = raws.iter().map(|r| r.graph.clone()).collect();
    store::save(&ds, &out_dir.join(paths::DATASET))?;
    store::save(
        &counterfactual_dataset("raw", &raws, &graphs)?,
        &out_dir.join(paths::RAW),
    )?;
    formats::save_manifest(&raws, &out_dir.join(paths::MANIFEST))
}

/// Rebuilds raw counterfactuals from a `produce` output directory.
pub fn load_raws(dir: &Path) -> Result<Vec<RawCounterfactual>> {
    let graphs = store::load(&dir.join(paths::RAW))?;
    let manifest_path = dir.join(paths::MANIFEST);
    let rows: Vec<formats::ManifestRow> = formats::read_csv(&manifest_path)?;
    if rows.len() != graphs.len() {
        return Err(Error::format(
            &manifest_path,
            0,
            format!("{} manifest rows for {} graphs", rows.len(), graphs.len()),
        ));
    }
    rows.iter()
        .zip(graphs.graphs)
        .enumerate()
        .map(|(i, (row, g))| {
            row.to_raw(g)
                .map_err(|m| Error::format(&manifest_path, i + 2, m))
        })
        .collect()
}

fn refine(
    cfg: &RunConfig,
    data: &DataArg,
    graphons: &Path,
    raw_dir: &Path,
    out_dir: &Path,
) -> Result<()> {
    let ds = open_dataset(data, cfg)?;
    let path = graphons;
    let graphons = formats::load_graphons(path)?;
    let groups = checked_groups(&ds, &graphons, cfg, path)?;
    let raws = load_raws(raw_dir)?;
    let mut cfs: Vec<Graph> = raws.iter().map(|r| r.graph.clone()).collect();
    let runs = with_exec(cfg, |e| Ok(e.refine(&ds, &graphons, &groups, &raws, cfg)))?;
    for run in runs {
        let run = run.map_err(|e| Error::from(e).in_stage("refine"))?;
        for (&m, g) in run.members.iter().zip(&run.gan.refined) {
            cfs[m] = g.clone();
        }
        formats::save_trace(&run.gan.trace, &out_dir.join(paths::trace(run.class)))?;
        let ck = formats::Checkpoint::Gan {
            version: formats::CHECKPOINT_VERSION,
            class: run.class,
            discriminator: run.gan.discriminator.clone(),
            generator_logits: run.gan.states.iter().map(|s| s.logits.clone()).collect(),
        };
        formats::save_json(&ck, &out_dir.join(format!("gan_class{}.json", run.class)))?;
    }
    store::save(
        &counterfactual_dataset("counterfactuals", &raws, &cfs)?,
        &out_dir.join(paths::COUNTERFACTUALS),
    )
}

fn classifier_config(cfg: &RunConfig) -> ClassifierConfig {
    ClassifierConfig {
        seed: derive_seed(cfg.seed, "classifier", 0),
        ..cfg.experiment.classifier.clone()
    }
}

fn train(cfg: &RunConfig, data: &DataArg, counterfactuals: &[PathBuf], out: &Path) -> Result<()> {
    let ds = open_dataset(data, cfg)?;
    let mut training = ds.subset(&ds.split.train);
    for path in counterfactuals {
        let cf = store::load(path)?;
        training.extend(cf.graphs.into_iter().zip(cf.labels));
    }
    let model = train_classifier(
        &training,
        &ds.subset(&ds.split.validation),
        &classifier_config(cfg),
    )
    .map_err(|e| Error::from(e).in_stage("classifier"))?;
    formats::save_json(
        &formats::Checkpoint::Classifier {
            version: formats::CHECKPOINT_VERSION,
            model,
        },
        out,
    )
}

fn evaluate(cfg: &RunConfig, data: &DataArg, model: &Path, out: &Path) -> Result<()> {
    let ds = open_dataset(data, cfg)?;
    let model = formats::load_classifier(model)?;
    let test = ds.subset(&ds.split.test);
    let predicted: Vec<usize> = test.iter().map(|(g, _)| predict(&model, g).1).collect();
    let actual: Vec<usize> = test.iter().map(|(_, l)| *l).collect();
    let det = detection_metrics(
        &predicted,
        &actual,
        cfg.experiment.classifier.positive_class,
    )
    .map_err(|e| Error::from(e).in_stage("evaluate"))?;
    let report = MetricsReport {
        dataset: ds.name.clone(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        augmentation: cfg.experiment.augmentation,
        precision: det.precision,
        recall: det.recall,
        f1: det.f1,
        realism: None,
        validity: None,
        proximity: None,
        sparsity: None,
        counterfactuals: 0,
        skipped_pairs: 0,
    };
    formats::save_metrics(&report, out)?;
    formats::print(&formats::summary_text(&report, &[]));
    Ok(())
}

pub fn gradcheck_table(report: &GradcheckReport) -> String {
    let mut s = format!(
        "{:<26} {:>6} {:>8} {:>12}  result\n",
        "op", "points", "redrawn", "max_rel_err"
    );
    for op in &report.ops {
        s.push_str(&format!(
            "{:<26} {:>6} {:>8} {:>12.3e}  {}\n",
            op.name,
            op.points,
            op.redrawn,
            op.max_rel_error,
            if op.passed { "ok" } else { "FAIL" }
        ));
    }
    s
}

fn gradcheck(gc: GradcheckConfig, out: &Option<PathBuf>) -> Result<()> {
    if gc.points == 0 || !(gc.step > 0.0) || !(gc.tolerance > 0.0) {
        return Err(Error::Usage(
            "gradcheck needs points >= 1 and positive step and tolerance".into(),
        ));
    }
    let t = Instant::now();
    let report = run_gradcheck(&gc);
    let table = gradcheck_table(&report);
    formats::print(&table);
    eprintln!("gradcheck finished in {:.2} s", t.elapsed().as_secs_f64());
    if let Some(path) = out {
        formats::write_text(path, &table)?;
    }
    if !report.passed() {
        let failed: Vec<&str> = report
            .ops
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.name.as_str())
            .collect();
        return Err(Error::Gradcheck(failed.join(", ")));
    }
    Ok(())
}
