//! Shared fixtures for the criterion benches.

use graphmlp::graph::{normalize_adjacency, sparse_power};
use graphmlp::ingest::synthetic::{generate, SyntheticConfig};
use graphmlp::nn::ModelDims;
use graphmlp::{Graph, Model, ModelKind, Rng, SparseMatrix, Tensor2};

pub fn random_tensor(rows: usize, cols: usize, seed: u64) -> Tensor2 {
    Tensor2::random_uniform(rows, cols, -1.0, 1.0, &mut Rng::new(seed))
}

/// Cora-sized synthetic graph, fixed seed.
pub fn cora_like() -> Graph {
    generate(&SyntheticConfig::cora_like(), 0).expect("preset is valid")
}

pub fn normalized(g: &Graph) -> SparseMatrix {
    normalize_adjacency(&g.adjacency())
}

pub fn power(g: &Graph, r: u32) -> SparseMatrix {
    sparse_power(&normalized(g), r).expect("square matrix")
}

/// Freshly initialised model in eval mode.
pub fn model(kind: ModelKind, g: &Graph, hidden: usize) -> Model {
    let dims = ModelDims {
        input: g.d(),
        hidden,
        classes: g.num_classes(),
    };
    let mut m = Model::new(kind, dims, 0.6, true).expect("valid dims");
    m.init_params(&mut Rng::new(1));
    m.set_mode(graphmlp::nn::Mode::Eval);
    m
}
