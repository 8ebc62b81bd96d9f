//! Single-file dataset format.
//!
//! ```text
//! motifcar-dataset 1
//! name planted
//! anomaly_class 0
//! graphs 2
//! split train 0 1
//! split validation
//! split test
//! graph 0 label 0 nodes 3 edges 2 roles MMC
//! 0 1
//! 1 2
//! graph 1 label 1 nodes 2 edges 1
//! 0 1
//! ```
//!
//! `roles` is present on every graph or on none; `M` marks a motif node and
//! `C` a context node. Edges are 0-based with `u < v`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use motifcar_core::graph::Role;
use motifcar_core::{Graph, LabeledDataset, Split};

use crate::error::{Error, Result};

pub const MAGIC: &str = "motifcar-dataset";
pub const VERSION: u32 = 1;

pub fn to_string(ds: &LabeledDataset) -> String {
    let mut s = String::new();
    let ids = |v: &[usize]| v.iter().map(|i| format!(" {i}")).collect::<String>();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "name {}", ds.name);
    let _ = writeln!(s, "anomaly_class {}", ds.anomaly_class);
    let _ = writeln!(s, "graphs {}", ds.graphs.len());
    let _ = writeln!(s, "split train{}", ids(&ds.split.train));
    let _ = writeln!(s, "split validation{}", ids(&ds.split.validation));
    let _ = writeln!(s, "split test{}", ids(&ds.split.test));
    for (i, (g, label)) in ds.graphs.iter().zip(&ds.labels).enumerate() {
        let edges = g.edges();
        let _ = write!(
            s,
            "graph {i} label {label} nodes {} edges {}",
            g.n(),
            edges.len()
        );
        if let Some(roles) = &ds.roles {
            let r: String = roles[i]
                .iter()
                .map(|r| if *r == Role::Motif { 'M' } else { 'C' })
                .collect();
            let _ = write!(s, " roles {r}");
        }
        s.push('\n');
        for (u, v) in edges {
            let _ = writeln!(s, "{u} {v}");
        }
    }
    s
}

pub fn save(ds: &LabeledDataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, to_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end())
            }
            None => Err(Error::format(
                self.path,
                self.line + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, self.line, msg)
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next(key)?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ if l == key => Ok(""),
            _ => Err(self.err(format!("expected {key:?}, found {l:?}"))),
        }
    }

    fn int<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(format!("expected an integer, found {s:?}")))
    }
}

pub fn parse(text: &str, path: &Path) -> Result<LabeledDataset> {
    let mut r = Lines {
        inner: text.lines().enumerate(),
        path,
        line: 0,
    };
    let header = r.next("header")?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| r.err(format!("not a {MAGIC} file")))?;
    if version != VERSION.to_string() {
        return Err(r.err(format!("unsupported version {version:?}")));
    }
    let name = r.keyed("name")?.to_string();
    let v = r.keyed("anomaly_class")?;
    let anomaly_class = r.int(v)?;
    let v = r.keyed("graphs")?;
    let n: usize = r.int(v)?;
    let mut split = Split::default();
    for (key, dst) in [
        ("train", &mut split.train),
        ("validation", &mut split.validation),
        ("test", &mut split.test),
    ] {
        let rest = r.keyed("split")?;
        let mut tokens = rest.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(r.err(format!("expected split {key}")));
        }
        for t in tokens {
            dst.push(r.int(t)?);
        }
    }
    let mut graphs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut roles: Vec<Vec<Role>> = Vec::new();
    for i in 0..n {
        let head: Vec<&str> = r.keyed("graph")?.split_whitespace().collect();
        let field = |k: &str| {
            head.iter()
                .position(|t| *t == k)
                .and_then(|p| head.get(p + 1))
                .copied()
        };
        if head.first().copied() != Some(i.to_string().as_str()) {
            return Err(r.err(format!("expected graph {i}")));
        }
        let get = |k: &str| field(k).ok_or_else(|| r.err(format!("graph header missing {k}")));
        let label: usize = r.int(get("label")?)?;
        let nodes: usize = r.int(get("nodes")?)?;
        let m: usize = r.int(get("edges")?)?;
        if let Some(rs) = field("roles") {
            if rs.len() != nodes {
                return Err(r.err(format!("{} roles for {nodes} nodes", rs.len())));
            }
            let parsed = rs
                .chars()
                .map(|c| match c {
                    'M' => Ok(Role::Motif),
                    'C' => Ok(Role::Context),
                    c => Err(r.err(format!("unknown role {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            roles.push(parsed);
        }
        let mut g = Graph::empty(nodes);
        for _ in 0..m {
            let l = r.next("edge")?;
            let mut t = l.split_whitespace();
            let (u, v) = match (t.next(), t.next(), t.next()) {
                (Some(u), Some(v), None) => (r.int::<usize>(u)?, r.int::<usize>(v)?),
                _ => return Err(r.err(format!("expected \"u v\", found {l:?}"))),
            };
            if u >= nodes || v >= nodes || u == v {
                return Err(r.err(format!("invalid edge {u} {v} for {nodes} nodes")));
            }
            g.set_edge(u, v, true);
        }
        graphs.push(g);
        labels.push(label);
    }
    if let Some((_, extra)) = r.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(r.err(format!("trailing content {extra:?}")));
    }
    if !roles.is_empty() && roles.len() != n {
        return Err(Error::format(
            path,
            1,
            "roles must be given for every graph or none",
        ));
    }
    let mut ds = LabeledDataset::new(name, graphs, labels, anomaly_class, Split::all_train(n))?;
    ds.split = split;
    ds.roles = (!roles.is_empty()).then_some(roles);
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use motifcar_core::synth::{generate_planted_motif_dataset, PlantedMotifConfig};

    #[test]
    fn round_trip_keeps_splits_and_roles() {
        let mut ds =
            generate_planted_motif_dataset(&PlantedMotifConfig::desk_fixture(4, 1)).unwrap();
        ds.resplit([2.0, 1.0, 1.0], 3).unwrap();
        let text = to_string(&ds);
        assert_eq!(parse(&text, Path::new("x")).unwrap(), ds);
    }

    #[test]
    fn bad_edge_reports_line() {
        let text = "motifcar-dataset 1\nname t\nanomaly_class 0\ngraphs 1\nsplit train 0\nsplit validation\nsplit test\ngraph 0 label 0 nodes 2 edges 1\n0 5\n";
        match parse(text, Path::new("x")).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 9),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let err = parse("motifcar-dataset 9\n", Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
