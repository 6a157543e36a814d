use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::rng::Rng;

/// Planetoid-style split: `per_class_train` labeled nodes of every class for
/// training, then `num_val` and `num_test` labeled nodes from the remainder.
/// Index lists are returned sorted.
pub fn make_planetoid_splits(
    g: &Graph,
    per_class_train: usize,
    num_val: usize,
    num_test: usize,
    rng: &mut Rng,
) -> Result<Splits> {
    if per_class_train == 0 {
        return Err(Error::InvalidArgument(
            "per_class_train must be positive".into(),
        ));
    }
    let c = g.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, l) in g.labels().iter().enumerate() {
        if let Some(k) = l {
            by_class[*k].push(i);
        }
    }
    let mut train = Vec::with_capacity(per_class_train * c);
    let mut rest = Vec::new();
    for (k, mut nodes) in by_class.into_iter().enumerate() {
        if nodes.len() < per_class_train {
            return Err(Error::Data(format!(
                "class {k} has {} labeled nodes, {per_class_train} needed for training",
                nodes.len()
            )));
        }
        rng.shuffle(&mut nodes);
        train.extend_from_slice(&nodes[..per_class_train]);
        rest.extend_from_slice(&nodes[per_class_train..]);
    }
    if rest.len() < num_val + num_test {
        return Err(Error::Data(format!(
            "{} labeled nodes left after training selection, {} needed for val+test",
            rest.len(),
            num_val + num_test
        )));
    }
    rest.sort_unstable();
    rng.shuffle(&mut rest);
    let mut val = rest[..num_val].to_vec();
    let mut test = rest[num_val..num_val + num_test].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Splits { train, val, test })
}
