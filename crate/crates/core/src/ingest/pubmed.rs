//! Pubmed-Diabetes tab format (`*.NODE.paper.tab`, `*.DIRECTED.cites.tab`).
//!
//! Node file: a title line, a header line declaring the vocabulary as
//! `numeric:<term>:<default>` columns, then one line per paper:
//! `<id> label=<c> <term>=<value> ... summary=...`. Cite file: two title
//! lines, then `<edge-id> paper:<a> | paper:<b>`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::io::read_text;
use super::LoadReport;
use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::tensor::Tensor2;

pub fn load_pubmed_tab(nodes_path: &Path, cites_path: &Path) -> Result<(Graph, LoadReport)> {
    let text = read_text(nodes_path)?;
    let what = nodes_path.display().to_string();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    lines
        .next()
        .ok_or_else(|| Error::format(&what, "missing title line"))?;
    let header = lines
        .next()
        .ok_or_else(|| Error::format(&what, "missing vocabulary header"))?;

    let mut vocab: HashMap<&str, usize> = HashMap::new();
    for tok in header.split('\t') {
        let mut parts = tok.splitn(3, ':');
        if let (Some("numeric"), Some(name)) = (parts.next(), parts.next()) {
            let next = vocab.len();
            vocab.entry(name).or_insert(next);
        }
    }
    let d = vocab.len();

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut features: Vec<f64> = Vec::new();
    let mut labels: Vec<Option<usize>> = Vec::new();
    let mut max_label = 0usize;
    for (lineno, line) in lines.enumerate() {
        let mut toks = line.split('\t');
        let id = toks.next().unwrap_or_default().trim();
        if id.is_empty() {
            continue;
        }
        let node = labels.len();
        ids.insert(id.to_string(), node);
        features.extend(std::iter::repeat(0.0).take(d));
        let row = &mut features[node * d..(node + 1) * d];
        let mut label = None;
        for tok in toks {
            let Some((key, value)) = tok.split_once('=') else {
                continue;
            };
            if key == "summary" {
                continue;
            }
            if key == "label" {
                let c: usize = value.trim().parse().map_err(|_| {
                    Error::format(
                        &what,
                        format!("node line {}: bad label `{value}`", lineno + 3),
                    )
                })?;
                if c == 0 {
                    return Err(Error::format(&what, "labels are 1-based"));
                }
                max_label = max_label.max(c);
                label = Some(c - 1);
                continue;
            }
            let col = *vocab.get(key).ok_or_else(|| {
                Error::format(
                    &what,
                    format!("attribute `{key}` not declared in the header"),
                )
            })?;
            row[col] = value
                .trim()
                .parse()
                .map_err(|_| Error::format(&what, format!("bad value `{value}` for `{key}`")))?;
        }
        labels.push(label);
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::format(&what, "no nodes"));
    }

    let cites = read_text(cites_path)?;
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for line in cites.lines() {
        let papers: Vec<&str> = line
            .split_whitespace()
            .filter_map(|t| t.strip_prefix("paper:"))
            .collect();
        if papers.is_empty() {
            continue;
        }
        if papers.len() != 2 {
            return Err(Error::format(
                cites_path.display().to_string(),
                format!("bad citation record `{line}`"),
            ));
        }
        report.raw_citations += 1;
        let (Some(&a), Some(&b)) = (ids.get(papers[0]), ids.get(papers[1])) else {
            report.skipped_unknown += 1;
            continue;
        };
        if a == b {
            report.skipped_self_loops += 1;
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push(key);
        } else {
            report.duplicate_edges += 1;
        }
    }

    let features = Tensor2::from_vec(n, d, features)?;
    let graph = Graph::new(features, labels, max_label, edges, Splits::default())?;
    Ok((graph, report))
}
