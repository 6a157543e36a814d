//! Synthetic citation-style graphs.
//!
//! Each class owns a block of "topic" vocabulary. A node emits
//! `words_per_node` distinct words; each is drawn from its class topic with
//! probability `signal`, otherwise uniformly from the whole vocabulary.
//! Edges join same-class endpoints with probability `homophily`. With a low
//! `signal` features alone are weak predictors while neighborhoods stay
//! informative, which is the regime the contrastive loss is meant for.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::splits::make_planetoid_splits;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureStyle {
    /// 0/1 bag of words.
    Binary,
    /// Term frequency times inverse document frequency.
    TfIdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    pub homophily: f64,
    pub words_per_node: usize,
    pub signal: f64,
    pub style: FeatureStyle,
    pub per_class_train: usize,
    pub num_val: usize,
    pub num_test: usize,
}

impl SyntheticConfig {
    /// Table-sized stand-ins for the three citation corpora.
    pub fn cora_like() -> Self {
        SyntheticConfig {
            n: 2708,
            d: 1433,
            num_classes: 7,
            num_edges: 5278,
            homophily: 0.55,
            words_per_node: 18,
            signal: 0.35,
            style: FeatureStyle::Binary,
            per_class_train: 20,
            num_val: 500,
            num_test: 1000,
        }
    }

    pub fn citeseer_like() -> Self {
        SyntheticConfig {
            n: 3327,
            d: 3703,
            num_classes: 6,
            num_edges: 4552,
            homophily: 0.45,
            words_per_node: 32,
            signal: 0.30,
            style: FeatureStyle::Binary,
            per_class_train: 20,
            num_val: 500,
            num_test: 1000,
        }
    }

    pub fn pubmed_like() -> Self {
        SyntheticConfig {
            n: 19717,
            d: 500,
            num_classes: 3,
            num_edges: 44324,
            homophily: 0.60,
            words_per_node: 50,
            signal: 0.25,
            style: FeatureStyle::TfIdf,
            per_class_train: 20,
            num_val: 500,
            num_test: 1000,
        }
    }

    /// A few hundred nodes; for tests and smoke runs.
    pub fn small() -> Self {
        SyntheticConfig {
            n: 420,
            d: 200,
            num_classes: 4,
            num_edges: 900,
            homophily: 0.85,
            words_per_node: 12,
            signal: 0.15,
            style: FeatureStyle::Binary,
            per_class_train: 10,
            num_val: 100,
            num_test: 200,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cora" | "cora-like" => Ok(Self::cora_like()),
            "citeseer" | "citeseer-like" => Ok(Self::citeseer_like()),
            "pubmed" | "pubmed-like" => Ok(Self::pubmed_like()),
            "small" => Ok(Self::small()),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic preset `{other}`"
            ))),
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n < 2 || self.num_classes == 0 || self.d < self.num_classes {
            return bad("need n ≥ 2, at least one class and d ≥ classes");
        }
        if !(0.0..=1.0).contains(&self.homophily) || !(0.0..=1.0).contains(&self.signal) {
            return bad("homophily and signal must lie in [0, 1]");
        }
        if self.words_per_node > self.d {
            return bad("words_per_node exceeds vocabulary");
        }
        if self.num_edges > self.n * (self.n - 1) / 4 {
            return bad("too many edges requested for a sparse graph");
        }
        Ok(())
    }
}

/// Generates a labeled graph with Planetoid splits; fully determined by `seed`.
pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<Graph> {
    cfg.check()?;
    let mut rng = Rng::new(seed);
    let (n, d, c) = (cfg.n, cfg.d, cfg.num_classes);

    let labels: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &k) in labels.iter().enumerate() {
        members[k].push(i);
    }
    // Guarantee every class can supply a training set.
    for k in 0..c {
        while members[k].len() < cfg.per_class_train.max(2) {
            let donor = (0..c).max_by_key(|&j| members[j].len()).unwrap();
            let i = members[donor].pop().unwrap();
            members[k].push(i);
        }
    }
    let mut labels = labels;
    for (k, m) in members.iter().enumerate() {
        for &i in m {
            labels[i] = k;
        }
    }

    let topic = d / c;
    let mut x = Tensor2::zeros(n, d);
    let mut counts = vec![0.0f64; n * d];
    for i in 0..n {
        let base = labels[i] * topic;
        let mut chosen = HashSet::with_capacity(cfg.words_per_node);
        while chosen.len() < cfg.words_per_node {
            let w = if rng.bernoulli(cfg.signal) {
                base + rng.below(topic)
            } else {
                rng.below(d)
            };
            chosen.insert(w);
            counts[i * d + w] += 1.0;
        }
        for w in chosen {
            x.set(i, w, 1.0);
        }
    }
    if cfg.style == FeatureStyle::TfIdf {
        let df: Vec<f64> = (0..d)
            .map(|w| (0..n).filter(|&i| x.get(i, w) != 0.0).count() as f64)
            .collect();
        for i in 0..n {
            let total: f64 = counts[i * d..(i + 1) * d].iter().sum();
            for w in 0..d {
                let tf = counts[i * d + w];
                if tf > 0.0 {
                    let idf = ((1.0 + n as f64) / (1.0 + df[w])).ln() + 1.0;
                    x.set(i, w, tf / total * idf);
                }
            }
        }
    }

    let mut edges = HashSet::with_capacity(cfg.num_edges);
    while edges.len() < cfg.num_edges {
        let i = rng.below(n);
        let j = if rng.bernoulli(cfg.homophily) {
            let m = &members[labels[i]];
            m[rng.below(m.len())]
        } else {
            rng.below(n)
        };
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();

    let labels = labels.into_iter().map(Some).collect();
    let g = Graph::new(x, labels, c, edges, Default::default())?;
    let splits =
        make_planetoid_splits(&g, cfg.per_class_train, cfg.num_val, cfg.num_test, &mut rng)?;
    g.with_splits(splits)
}
