//! LINQS `.content` / `.cites` pairs (Cora, Citeseer).

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::io::read_text;
use super::LoadReport;
use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::tensor::Tensor2;

/// Loads a LINQS corpus.
///
/// Node order follows the content file; class names are numbered by first
/// appearance. Citations become undirected edges. Records naming unknown
/// ids or citing themselves are skipped and counted in the report.
pub fn load_linqs_content_cites(
    content_path: &Path,
    cites_path: &Path,
) -> Result<(Graph, LoadReport)> {
    let content = read_text(content_path)?;
    let cites = read_text(cites_path)?;
    let what = content_path.display().to_string();

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    let mut d: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::format(
                &what,
                format!("line {}: expected id, features and label", lineno + 1),
            ));
        }
        let width = fields.len() - 2;
        match d {
            None => d = Some(width),
            Some(w) if w != width => {
                return Err(Error::format(
                    &what,
                    format!(
                        "line {}: {width} features, earlier rows have {w}",
                        lineno + 1
                    ),
                ))
            }
            _ => {}
        }
        let node = labels.len();
        if ids.insert(fields[0].to_string(), node).is_some() {
            return Err(Error::format(
                &what,
                format!("line {}: duplicate id `{}`", lineno + 1, fields[0]),
            ));
        }
        for f in &fields[1..fields.len() - 1] {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::format(&what, format!("line {}: bad feature `{f}`", lineno + 1))
            })?;
            features.push(v);
        }
        let label = fields[fields.len() - 1].trim();
        let next = classes.len();
        labels.push(Some(*classes.entry(label.to_string()).or_insert(next)));
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::format(&what, "no nodes"));
    }
    let d = d.unwrap_or(0);

    let mut report = LoadReport::default();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    for line in cites.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::format(
                cites_path.display().to_string(),
                format!("bad citation record `{line}`"),
            ));
        }
        report.raw_citations += 1;
        let (Some(&a), Some(&b)) = (ids.get(fields[0]), ids.get(fields[1])) else {
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
    let graph = Graph::new(features, labels, classes.len(), edges, Splits::default())?;
    Ok((graph, report))
}
