//! Dataset loading, split construction and the canonical on-disk format.

mod canonical;
mod io;
mod linqs;
mod pubmed;
mod splits;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use canonical::{load_canonical, read_meta, save_canonical, CanonicalMeta, FORMAT_VERSION};
pub use io::{read_text, sha256_hex};
pub use linqs::load_linqs_content_cites;
pub use pubmed::load_pubmed_tab;
pub use splits::make_planetoid_splits;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Counters collected while parsing raw citation files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Citation records read, before any filtering.
    pub raw_citations: usize,
    /// Records naming an id absent from the node file.
    pub skipped_unknown: usize,
    pub skipped_self_loops: usize,
    /// Records collapsing onto an already-seen undirected edge.
    pub duplicate_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Cora,
    Citeseer,
    Pubmed,
    Custom,
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cora" => Ok(DatasetName::Cora),
            "citeseer" => Ok(DatasetName::Citeseer),
            "pubmed" => Ok(DatasetName::Pubmed),
            "custom" => Ok(DatasetName::Custom),
            other => Err(Error::InvalidArgument(format!("unknown dataset `{other}`"))),
        }
    }
}

/// Expected statistics of a named citation corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub expected_n: usize,
    /// Citation records in the raw corpus.
    pub expected_edges: usize,
    pub expected_d: usize,
    pub expected_classes: usize,
    /// Labeled training nodes per class under the Planetoid convention.
    pub per_class_train: usize,
}

impl DatasetSpec {
    pub const CORA: DatasetSpec = DatasetSpec {
        name: DatasetName::Cora,
        expected_n: 2708,
        expected_edges: 5429,
        expected_d: 1433,
        expected_classes: 7,
        per_class_train: 20,
    };
    pub const CITESEER: DatasetSpec = DatasetSpec {
        name: DatasetName::Citeseer,
        expected_n: 3327,
        expected_edges: 4732,
        expected_d: 3703,
        expected_classes: 6,
        per_class_train: 20,
    };
    pub const PUBMED: DatasetSpec = DatasetSpec {
        name: DatasetName::Pubmed,
        expected_n: 19717,
        expected_edges: 44338,
        expected_d: 500,
        expected_classes: 3,
        per_class_train: 20,
    };

    pub const NUM_VAL: usize = 500;
    pub const NUM_TEST: usize = 1000;

    pub fn named(name: DatasetName) -> Option<DatasetSpec> {
        match name {
            DatasetName::Cora => Some(Self::CORA),
            DatasetName::Citeseer => Some(Self::CITESEER),
            DatasetName::Pubmed => Some(Self::PUBMED),
            DatasetName::Custom => None,
        }
    }

    /// Fails unless node, feature and class counts and the raw citation count all match.
    pub fn validate(&self, g: &Graph, report: &LoadReport) -> Result<()> {
        let checks = [
            ("nodes", g.n(), self.expected_n),
            ("features", g.d(), self.expected_d),
            ("classes", g.num_classes(), self.expected_classes),
            (
                "citation records",
                report.raw_citations,
                self.expected_edges,
            ),
        ];
        for (what, got, want) in checks {
            if got != want {
                return Err(Error::Data(format!(
                    "{:?}: expected {want} {what}, loaded {got}",
                    self.name
                )));
            }
        }
        if g.edges().len() > self.expected_edges {
            return Err(Error::Data(format!(
                "{:?}: {} unique edges exceeds {} citation records",
                self.name,
                g.edges().len(),
                self.expected_edges
            )));
        }
        Ok(())
    }
}
