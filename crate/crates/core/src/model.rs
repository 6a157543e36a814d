//! A trained network of either family, plus accuracy evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, SparseMatrix, SplitKind};
use crate::nn::{GcnModel, GraphMlpModel, Mode, ModelDims, ParamMut, ParamView};
use crate::rng::Rng;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Graph-MLP trained with the contrastive term.
    GraphMlp,
    /// Two-layer graph convolution baseline.
    Gcn,
    /// Graph-MLP architecture trained on cross-entropy alone.
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GraphMlp => "graphmlp",
            ModelKind::Gcn => "gcn",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn needs_adjacency(self) -> bool {
        self == ModelKind::Gcn
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "graphmlp" => Ok(ModelKind::GraphMlp),
            "gcn" => Ok(ModelKind::Gcn),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    GraphMlp(GraphMlpModel),
    Gcn(GcnModel),
}

impl Model {
    pub fn new(kind: ModelKind, dims: ModelDims, dropout: f64, use_bias: bool) -> Result<Model> {
        Ok(match kind {
            ModelKind::Gcn => Model::Gcn(GcnModel::new(dims, dropout, use_bias)?),
            ModelKind::GraphMlp | ModelKind::Mlp => {
                Model::GraphMlp(GraphMlpModel::new(dims, dropout, use_bias)?)
            }
        })
    }

    pub fn dims(&self) -> ModelDims {
        match self {
            Model::GraphMlp(m) => m.dims(),
            Model::Gcn(m) => m.dims(),
        }
    }

    pub fn dropout_rate(&self) -> f64 {
        match self {
            Model::GraphMlp(m) => m.dropout.rate(),
            Model::Gcn(m) => m.dropout.rate(),
        }
    }

    pub fn uses_bias(&self) -> bool {
        match self {
            Model::GraphMlp(m) => m.input.uses_bias(),
            Model::Gcn(m) => m.layer1.uses_bias(),
        }
    }

    pub fn set_mode(&mut self, mode: Mode) {
        match self {
            Model::GraphMlp(m) => m.set_mode(mode),
            Model::Gcn(m) => m.set_mode(mode),
        }
    }

    pub fn init_params(&mut self, rng: &mut Rng) {
        match self {
            Model::GraphMlp(m) => m.init_params(rng),
            Model::Gcn(m) => m.init_params(rng),
        }
    }

    pub fn clear_caches(&mut self) {
        match self {
            Model::GraphMlp(m) => m.clear_caches(),
            Model::Gcn(m) => m.clear_caches(),
        }
    }

    pub fn params(&self) -> Vec<ParamView<'_>> {
        match self {
            Model::GraphMlp(m) => m.params(),
            Model::Gcn(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        match self {
            Model::GraphMlp(m) => m.params_mut(),
            Model::Gcn(m) => m.params_mut(),
        }
    }

    /// Eval-mode logits for `rows`.
    ///
    /// Graph-MLP reads only those rows of `x` and ignores `a_hat` entirely.
    /// GCN needs the full feature matrix and an adjacency.
    pub fn predict_logits(
        &self,
        x: &Tensor2,
        a_hat: Option<&SparseMatrix>,
        rows: &[usize],
    ) -> Result<Tensor2> {
        match self {
            Model::GraphMlp(m) => Ok(m.predict(&x.select_rows(rows))?.1),
            Model::Gcn(m) => {
                let a = a_hat.ok_or_else(|| {
                    Error::InvalidArgument("GCN evaluation needs an adjacency matrix".into())
                })?;
                Ok(m.predict(a, x)?.select_rows(rows))
            }
        }
    }

    /// Class predictions (lowest index wins ties) for `rows`.
    pub fn predict_classes(
        &self,
        x: &Tensor2,
        a_hat: Option<&SparseMatrix>,
        rows: &[usize],
    ) -> Result<Vec<usize>> {
        Ok(self.predict_logits(x, a_hat, rows)?.argmax_rows())
    }

    /// Accuracy on one split of `g`, with `x` the (possibly preprocessed) features.
    pub fn evaluate(
        &self,
        g: &Graph,
        x: &Tensor2,
        a_hat: Option<&SparseMatrix>,
        split: SplitKind,
    ) -> Result<f64> {
        let ids = g.splits().get(split);
        if ids.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} split is empty",
                split.name()
            )));
        }
        let pred = self.predict_classes(x, a_hat, ids)?;
        Ok(accuracy(&pred, g.labels(), ids))
    }
}

/// Fraction of `ids` whose prediction equals the label; `pred[k]` belongs to `ids[k]`.
pub fn accuracy(pred: &[usize], labels: &[Option<usize>], ids: &[usize]) -> f64 {
    if ids.is_empty() {
        return 0.0;
    }
    let correct = ids
        .iter()
        .zip(pred)
        .filter(|(&i, &p)| labels[i] == Some(p))
        .count();
    correct as f64 / ids.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;

    #[test]
    fn accuracy_of_one_hot_and_zero_logits() {
        let labels = vec![Some(2), Some(0), Some(1), Some(0)];
        let ids = [0, 1, 2, 3];
        let mut onehot = Tensor2::zeros(4, 3);
        for (i, l) in labels.iter().enumerate() {
            onehot.set(i, l.unwrap(), 1.0);
        }
        assert_eq!(accuracy(&onehot.argmax_rows(), &labels, &ids), 1.0);
        let zeros = Tensor2::zeros(4, 3);
        assert_eq!(accuracy(&zeros.argmax_rows(), &labels, &ids), 0.5);
    }

    #[test]
    fn gcn_needs_adjacency_and_mlp_ignores_it() {
        let dims = ModelDims {
            input: 3,
            hidden: 4,
            classes: 2,
        };
        let x = Tensor2::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.5, -1.0, 0.0]]);
        let labels = vec![Some(0), Some(1)];
        let splits = Splits {
            train: vec![0],
            val: vec![],
            test: vec![1],
        };
        let g = Graph::new(x.clone(), labels, 2, vec![(0, 1)], splits).unwrap();
        let mut rng = Rng::new(1);
        let mut gcn = Model::new(ModelKind::Gcn, dims, 0.5, true).unwrap();
        gcn.init_params(&mut rng);
        assert!(gcn.evaluate(&g, &x, None, SplitKind::Test).is_err());
        let mut mlp = Model::new(ModelKind::GraphMlp, dims, 0.5, true).unwrap();
        mlp.init_params(&mut rng);
        let a = crate::graph::normalize_adjacency(&g.adjacency());
        assert_eq!(
            mlp.predict_logits(&x, None, &[1]).unwrap(),
            mlp.predict_logits(&x, Some(&a), &[1]).unwrap()
        );
        assert!(mlp.evaluate(&g, &x, None, SplitKind::Val).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "graph-mlp".parse::<ModelKind>().unwrap(),
            ModelKind::GraphMlp
        );
        assert_eq!("GCN".parse::<ModelKind>().unwrap(), ModelKind::Gcn);
        assert!("gat".parse::<ModelKind>().is_err());
    }
}
