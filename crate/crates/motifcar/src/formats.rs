//! Graphon files, counterfactual manifests, traces, checkpoints and reports.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::Path;

use motifcar_core::detector::ClassifierModel;
use motifcar_core::graph::Role;
use motifcar_core::metrics::MetricsReport;
use motifcar_core::optimizer::gnn::DiscriminatorParams;
use motifcar_core::optimizer::TraceRow;
use motifcar_core::producer::{CfNode, Provenance, RawCounterfactual};
use motifcar_core::{Graph, Graphon, Mat};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAPHON_MAGIC: &str = "motifcar-graphon";
pub const CHECKPOINT_VERSION: u32 = 1;

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---- graphons ----

/// ```text
/// motifcar-graphon 1
/// graphon <group> <K>
/// <K rows of K values>
/// ```
/// repeated once per group. The group is `class * graphon_clusters + cluster`,
/// i.e. the class id with one cluster per class.
pub fn graphons_to_string(graphons: &[(usize, Graphon)]) -> String {
    let mut s = format!("{GRAPHON_MAGIC} 1\n");
    for (group, w) in graphons {
        let _ = writeln!(s, "graphon {group} {}", w.k());
        for i in 0..w.k() {
            let row: Vec<String> = (0..w.k()).map(|j| format!("{}", w.get(i, j))).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

pub fn save_graphons(graphons: &[(usize, Graphon)], path: &Path) -> Result<()> {
    write_text(path, &graphons_to_string(graphons))
}

pub fn parse_graphons(text: &str, path: &Path) -> Result<Vec<(usize, Graphon)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == format!("{GRAPHON_MAGIC} 1") => {}
        Some((n, l)) => {
            return Err(Error::format(
                path,
                n,
                format!("expected \"{GRAPHON_MAGIC} 1\", found {l:?}"),
            ))
        }
        None => return Err(Error::format(path, 1, "empty graphon file")),
    }
    let mut out = Vec::new();
    while let Some((n, l)) = lines.next() {
        let t: Vec<&str> = l.split_whitespace().collect();
        let (class, k) = match t.as_slice() {
            ["graphon", c, k] => match (c.parse::<usize>(), k.parse::<usize>()) {
                (Ok(c), Ok(k)) if k > 0 => (c, k),
                _ => return Err(Error::format(path, n, format!("bad graphon header {l:?}"))),
            },
            _ => {
                return Err(Error::format(
                    path,
                    n,
                    format!("expected \"graphon <group> <K>\", found {l:?}"),
                ))
            }
        };
        let mut m = Mat::zeros(k, k);
        for i in 0..k {
            let (n, row) = lines.next().ok_or_else(|| {
                Error::format(path, n, format!("graphon {class}: missing row {i}"))
            })?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != k {
                return Err(Error::format(
                    path,
                    n,
                    format!("expected {k} values, found {}", vals.len()),
                ));
            }
            for (j, v) in vals.iter().enumerate() {
                m[(i, j)] = v
                    .parse()
                    .map_err(|_| Error::format(path, n, format!("bad value {v:?}")))?;
            }
        }
        let w = Graphon::new(m).map_err(|e| Error::format(path, n, e.to_string()))?;
        out.push((class, w));
    }
    Ok(out)
}

pub fn load_graphons(path: &Path) -> Result<Vec<(usize, Graphon)>> {
    parse_graphons(&read_text(path)?, path)
}

// ---- counterfactual manifest ----

/// One manifest record per counterfactual. `sources` lists the donor node id
/// of every counterfactual node, motif nodes (from `g_id`) first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub index: usize,
    pub g_id: usize,
    pub h_id: usize,
    pub label: usize,
    pub seed: u64,
    pub self_recombination: bool,
    pub resampled_cross: bool,
    pub n_motif: usize,
    pub sources: String,
}

impl ManifestRow {
    pub fn from_raw(index: usize, raw: &RawCounterfactual) -> Self {
        let p = &raw.provenance;
        ManifestRow {
            index,
            g_id: p.g_id,
            h_id: p.h_id,
            label: p.label,
            seed: p.seed,
            self_recombination: p.self_recombination,
            resampled_cross: p.resampled_cross,
            n_motif: raw.n_motif,
            sources: raw
                .nodes
                .iter()
                .map(|n| n.source.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        }
    }

    /// Rebuilds the raw counterfactual around its stored graph.
    pub fn to_raw(&self, graph: Graph) -> std::result::Result<RawCounterfactual, String> {
        let sources: Vec<usize> = self
            .sources
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| format!("bad source id {s:?}")))
            .collect::<std::result::Result<_, _>>()?;
        if sources.len() != graph.n() {
            return Err(format!(
                "{} sources for a {}-node graph",
                sources.len(),
                graph.n()
            ));
        }
        if self.n_motif == 0 || self.n_motif >= graph.n() {
            return Err(format!(
                "n_motif {} invalid for {} nodes",
                self.n_motif,
                graph.n()
            ));
        }
        let m = self.n_motif;
        let n = graph.n();
        let nodes = sources
            .iter()
            .enumerate()
            .map(|(i, &s)| CfNode {
                role: if i < m { Role::Motif } else { Role::Context },
                source: s,
            })
            .collect();
        let cross_candidates: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (m..n).map(move |j| (i, j))).collect();
        let initial_cross_edges = cross_candidates
            .iter()
            .copied()
            .filter(|&(i, j)| graph.has_edge(i, j))
            .collect();
        Ok(RawCounterfactual {
            nodes,
            graph,
            n_motif: m,
            cross_candidates,
            initial_cross_edges,
            provenance: Provenance {
                g_id: self.g_id,
                h_id: self.h_id,
                label: self.label,
                seed: self.seed,
                self_recombination: self.self_recombination,
                resampled_cross: self.resampled_cross,
            },
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::format(path, line, format!("{kind:?}")),
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn save_manifest(raws: &[RawCounterfactual], path: &Path) -> Result<()> {
    let rows: Vec<ManifestRow> = raws
        .iter()
        .enumerate()
        .map(|(i, r)| ManifestRow::from_raw(i, r))
        .collect();
    write_csv(path, &rows)
}

pub fn save_trace(trace: &[TraceRow], path: &Path) -> Result<()> {
    write_csv(path, trace)
}

// ---- checkpoints ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checkpoint {
    Classifier {
        version: u32,
        model: ClassifierModel,
    },
    /// Discriminator and per-counterfactual edge logits of one refinement run.
    Gan {
        version: u32,
        class: usize,
        discriminator: DiscriminatorParams,
        generator_logits: Vec<Mat>,
    },
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Usage(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))
}

pub fn load_classifier(path: &Path) -> Result<ClassifierModel> {
    match load_json::<Checkpoint>(path)? {
        Checkpoint::Classifier {
            version: CHECKPOINT_VERSION,
            model,
        } => Ok(model),
        Checkpoint::Classifier { version, .. } => Err(Error::format(
            path,
            1,
            format!("unsupported checkpoint version {version}"),
        )),
        Checkpoint::Gan { .. } => Err(Error::format(
            path,
            1,
            "expected a classifier checkpoint, found a GAN one",
        )),
    }
}

// ---- reports ----

pub fn save_metrics(report: &MetricsReport, path: &Path) -> Result<()> {
    save_json(report, path)
}

/// Appends `report` to a CSV ledger, writing the header for a new file.
pub fn append_ledger(report: &MetricsReport, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    w.serialize(report).map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

pub fn summary_text(report: &MetricsReport, notes: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset        {}", report.dataset);
    let _ = writeln!(s, "seed           {}", report.seed);
    let _ = writeln!(s, "config hash    {}", report.config_hash);
    let _ = writeln!(
        s,
        "augmentation   {}",
        if report.augmentation { "on" } else { "off" }
    );
    let _ = writeln!(s, "precision      {:.4}", report.precision);
    let _ = writeln!(s, "recall         {:.4}", report.recall);
    let _ = writeln!(s, "f1             {:.4}", report.f1);
    let _ = writeln!(s, "realism        {}", opt(report.realism));
    let _ = writeln!(s, "validity       {}", opt(report.validity));
    let _ = writeln!(s, "proximity      {}", opt(report.proximity));
    let _ = writeln!(s, "sparsity       {}", opt(report.sparsity));
    let _ = writeln!(
        s,
        "counterfactuals {} ({} pairs skipped)",
        report.counterfactuals, report.skipped_pairs
    );
    for n in notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// Writes to stdout-like sinks without failing on a closed pipe.
pub fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphon_text_round_trips() {
        let w = Graphon::new(Mat::from_fn(3, 3, |i, j| ((i + j) as f64 / 7.0).min(1.0))).unwrap();
        let text = graphons_to_string(&[(0, w.clone()), (2, Graphon::constant(1, 0.25).unwrap())]);
        let back = parse_graphons(&text, Path::new("w")).unwrap();
        assert_eq!(back, vec![(0, w), (2, Graphon::constant(1, 0.25).unwrap())]);
    }

    #[test]
    fn graphon_rejects_short_row() {
        let err = parse_graphons("motifcar-graphon 1\ngraphon 0 2\n0 1\n1\n", Path::new("w"))
            .unwrap_err();
        assert!(matches!(err, Error::Format { line: 4, .. }), "{err}");
    }

    #[test]
    fn manifest_row_rebuilds_the_raw() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let row = ManifestRow {
            index: 0,
            g_id: 3,
            h_id: 5,
            label: 1,
            seed: 9,
            self_recombination: false,
            resampled_cross: false,
            n_motif: 2,
            sources: "4 0 2 7".into(),
        };
        let raw = row.to_raw(g).unwrap();
        assert_eq!(raw.initial_cross_edges, vec![(1, 2)]);
        assert_eq!(raw.cross_candidates.len(), 4);
        assert_eq!(ManifestRow::from_raw(0, &raw), row);
    }
}
