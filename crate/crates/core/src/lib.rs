//! Graph-MLP: node classification without message passing, trained with a
//! neighbour-contrastive loss, plus the GCN baseline it is compared against.

// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod checkpoint;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod ingest;
pub mod loss;
pub mod model;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;
pub mod train;

pub use checkpoint::Checkpoint;
pub use error::{Error, ErrorKind, Result};
pub use graph::{Graph, SparseMatrix, SplitKind, Splits};
pub use model::{Model, ModelKind};
pub use rng::Rng;
pub use tensor::Tensor2;
pub use train::{train, TrainConfig, TrainResult};
