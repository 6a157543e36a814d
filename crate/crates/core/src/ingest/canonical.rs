//! Canonical dataset directory.
//!
//! ```text
//! meta.json     format version, name, counts, sha256 of each data file
//! features.tsv  one node per line, d tab-separated floats
//! labels.tsv    one class index or -1 per line
//! edges.tsv     `i\tj` per line, i < j, sorted, unique
//! splits.json   {"train": [...], "val": [...], "test": [...]}
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load/save
//! cycle reproduces every file byte for byte. Any data file may instead be
//! present gzip-compressed with a `.gz` suffix; checksums cover the
//! decompressed text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{read_text, sha256_hex, write_bytes};
use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::tensor::Tensor2;

pub const FORMAT_VERSION: u32 = 1;

const FEATURES: &str = "features.tsv";
const LABELS: &str = "labels.tsv";
const EDGES: &str = "edges.tsv";
const SPLITS: &str = "splits.json";
const META: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalMeta {
    pub format_version: u32,
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    pub num_train: usize,
    pub num_val: usize,
    pub num_test: usize,
    pub checksums: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct SplitsFile {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

fn render(g: &Graph) -> Result<[(&'static str, String); 4]> {
    let x = g.features();
    let mut features = String::with_capacity(x.rows() * x.cols() * 2);
    for i in 0..x.rows() {
        for (k, v) in x.row(i).iter().enumerate() {
            if k > 0 {
                features.push('\t');
            }
            write!(features, "{v}").unwrap();
        }
        features.push('\n');
    }
    let mut labels = String::new();
    for l in g.labels() {
        match l {
            Some(c) => writeln!(labels, "{c}").unwrap(),
            None => labels.push_str("-1\n"),
        }
    }
    let mut edges = String::new();
    for (i, j) in g.edges() {
        writeln!(edges, "{i}\t{j}").unwrap();
    }
    let s = g.splits();
    let splits = serde_json::to_string(&SplitsFile {
        train: s.train.clone(),
        val: s.val.clone(),
        test: s.test.clone(),
    })? + "\n";
    Ok([
        (FEATURES, features),
        (LABELS, labels),
        (EDGES, edges),
        (SPLITS, splits),
    ])
}

/// Writes `g` under `dir`, creating it if needed.
pub fn save_canonical(g: &Graph, name: &str, dir: &Path) -> Result<CanonicalMeta> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut checksums = BTreeMap::new();
    for (file, body) in render(g)? {
        checksums.insert(file.to_string(), sha256_hex(body.as_bytes()));
        write_bytes(&dir.join(file), body.as_bytes())?;
    }
    let meta = CanonicalMeta {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        n: g.n(),
        d: g.d(),
        num_classes: g.num_classes(),
        num_edges: g.edges().len(),
        num_train: g.splits().train.len(),
        num_val: g.splits().val.len(),
        num_test: g.splits().test.len(),
        checksums,
    };
    let json = serde_json::to_string_pretty(&meta)? + "\n";
    write_bytes(&dir.join(META), json.as_bytes())?;
    Ok(meta)
}

pub fn read_meta(dir: &Path) -> Result<CanonicalMeta> {
    let meta: CanonicalMeta = serde_json::from_str(&read_text(&dir.join(META))?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::format(
            META,
            format!(
                "format version {} (this build reads {FORMAT_VERSION})",
                meta.format_version
            ),
        ));
    }
    Ok(meta)
}

/// Reads a directory written by [`save_canonical`], verifying checksums and counts.
pub fn load_canonical(dir: &Path) -> Result<(Graph, CanonicalMeta)> {
    let meta = read_meta(dir)?;
    let mut text = BTreeMap::new();
    for file in [FEATURES, LABELS, EDGES, SPLITS] {
        let body = read_text(&dir.join(file))?;
        match meta.checksums.get(file) {
            Some(sum) if *sum == sha256_hex(body.as_bytes()) => {}
            Some(_) => return Err(Error::Checksum(file.to_string())),
            None => return Err(Error::format(META, format!("no checksum for {file}"))),
        }
        text.insert(file, body);
    }

    let (n, d) = (meta.n, meta.d);
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (lineno, line) in text[FEATURES].lines().enumerate() {
        let before = data.len();
        if d > 0 {
            for tok in line.split('\t') {
                data.push(tok.parse::<f64>().map_err(|_| {
                    Error::format(FEATURES, format!("line {}: bad value `{tok}`", lineno + 1))
                })?);
            }
        }
        if data.len() - before != d {
            return Err(Error::format(
                FEATURES,
                format!("line {}: expected {d} values", lineno + 1),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::format(
            FEATURES,
            format!("{rows} rows, meta says {n}"),
        ));
    }

    let labels = text[LABELS]
        .lines()
        .map(|l| match l.parse::<i64>() {
            Ok(-1) => Ok(None),
            Ok(c) if c >= 0 => Ok(Some(c as usize)),
            _ => Err(Error::format(LABELS, format!("bad label `{l}`"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut edges = Vec::with_capacity(meta.num_edges);
    for line in text[EDGES].lines() {
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(EDGES, format!("bad edge `{line}`")))?;
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(EDGES, format!("bad edge `{line}`")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    if edges.len() != meta.num_edges {
        return Err(Error::format(
            EDGES,
            format!("{} edges, meta says {}", edges.len(), meta.num_edges),
        ));
    }

    let s: SplitsFile = serde_json::from_str(&text[SPLITS])?;
    let splits = Splits {
        train: s.train,
        val: s.val,
        test: s.test,
    };
    let g = Graph::new(
        Tensor2::from_vec(n, d, data)?,
        labels,
        meta.num_classes,
        edges,
        splits,
    )?;
    Ok((g, meta))
}
