//! TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use motifcar_core::graph::named;
use motifcar_core::pipeline::ExperimentConfig;
use motifcar_core::synth::{PlantedClass, PlantedMotifConfig};
use motifcar_core::Graph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the graphs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated planted-motif graphs.
    Planted(PlantedSource),
    /// Benchmark text layout: `<dir>/<name>_A.txt` and friends.
    Tu { dir: PathBuf, name: String },
    /// Single-file dataset written by `synth` or a previous run.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantedSource {
    /// One motif per class, e.g. `"complete:4"`, `"cycle:4"`, `"path:5"`,
    /// `"star:5"`.
    pub motifs: Vec<String>,
    pub graphs_per_class: usize,
    /// Inclusive context node-count range.
    pub context_nodes: [usize; 2],
    pub context_p: f64,
    pub cross_edge_count: usize,
    /// Generator seed; derived from the run seed when absent.
    pub seed: Option<u64>,
}

impl Default for PlantedSource {
    fn default() -> Self {
        let d = PlantedMotifConfig::desk_fixture(50, 0);
        PlantedSource {
            motifs: vec!["complete:4".into(), "cycle:4".into()],
            graphs_per_class: d.graphs_per_class,
            context_nodes: [d.classes[0].context_nodes.0, d.classes[0].context_nodes.1],
            context_p: d.classes[0].context_p,
            cross_edge_count: d.cross_edge_count,
            seed: None,
        }
    }
}

/// Parses `"<family>:<n>"`.
pub fn parse_motif(spec: &str) -> Result<Graph> {
    let (family, n) = spec
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("motif {spec:?} is not <family>:<nodes>")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("motif {spec:?}: bad node count")))?;
    if n < 2 {
        return Err(Error::Usage(format!(
            "motif {spec:?} needs at least 2 nodes"
        )));
    }
    Ok(match family.trim() {
        "complete" => named::complete(n),
        "cycle" if n >= 3 => named::cycle(n),
        "path" => named::path(n),
        "star" => named::star(n, 0),
        _ => return Err(Error::Usage(format!("unknown motif {spec:?}"))),
    })
}

impl PlantedSource {
    pub fn to_config(&self, seed: u64) -> Result<PlantedMotifConfig> {
        let classes = self
            .motifs
            .iter()
            .map(|m| {
                Ok(PlantedClass {
                    motif: parse_motif(m)?,
                    context_nodes: (self.context_nodes[0], self.context_nodes[1]),
                    context_p: self.context_p,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = PlantedMotifConfig {
            classes,
            graphs_per_class: self.graphs_per_class,
            cross_edge_count: self.cross_edge_count,
            seed: self.seed.unwrap_or(seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    /// Worker threads for data-parallel stages.
    pub jobs: usize,
    pub output_dir: PathBuf,
    /// Run-ledger CSV; `<output_dir>/ledger.csv` when absent.
    pub ledger: Option<PathBuf>,
    pub dataset: DatasetSource,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 1,
            output_dir: PathBuf::from("motifcar-out"),
            ledger: None,
            dataset: DatasetSource::Planted(PlantedSource::default()),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {}", e.message())))
    }

    /// Reads `path` (defaults when `None`) and applies `key=value` overrides
    /// addressed by dotted key paths.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                // Parse once as a config so unknown keys fail with context.
                Self::from_toml(&text)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Usage(format!("config: {}", e.message())))?
            }
            None => toml::Value::Table(Default::default()),
        };
        for o in overrides {
            set_key(&mut value, o)?;
        }
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Usage(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::Usage("jobs must be at least 1".into()));
        }
        if let DatasetSource::Planted(p) = &self.dataset {
            p.to_config(0)?;
        }
        self.experiment.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// FNV-1a of the resolved TOML text, as 16 hex digits. Keys that only
    /// affect execution (`jobs`, `output_dir`, `ledger`) are left out.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            jobs: 1,
            output_dir: PathBuf::new(),
            ledger: None,
            ..self.clone()
        };
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in canonical.to_toml().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.ledger
            .clone()
            .unwrap_or_else(|| self.output_dir.join("ledger.csv"))
    }
}

/// Applies one `a.b.c=value` override. The value is read as a TOML value
/// and falls back to a plain string.
fn set_key(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {assignment:?} is not key=value")))?;
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = root;
    for (i, p) in parts.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| {
            Error::Usage(format!("override {key:?}: {p:?} is not inside a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert((*p).to_string(), parsed);
            return Ok(());
        }
        cur = table
            .entry((*p).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}
