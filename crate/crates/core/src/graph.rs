//! Graph container and CSR adjacency algebra.
//!
//! `SparseMatrix` holds every adjacency variant used by training and
//! evaluation: the raw binary `A`, the renormalized `Â = D^{-1/2}(A+I)D^{-1/2}`,
//! its powers `Â^r` (the source of the contrastive weights), and corrupted
//! copies of `A`. Column indices are sorted within each row and explicit
//! zeros are never stored.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor2;

/// Values with magnitude below this are dropped after sparse products.
pub const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitKind::Train),
            "val" => Ok(SplitKind::Val),
            "test" => Ok(SplitKind::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

impl Splits {
    pub fn get(&self, kind: SplitKind) -> &[usize] {
        match kind {
            SplitKind::Train => &self.train,
            SplitKind::Val => &self.val,
            SplitKind::Test => &self.test,
        }
    }

    fn validate(&self, n: usize, labels: &[Option<usize>]) -> Result<()> {
        let mut seen = vec![false; n];
        for kind in [SplitKind::Train, SplitKind::Val, SplitKind::Test] {
            for &i in self.get(kind) {
                if i >= n {
                    return Err(Error::Data(format!(
                        "{} split index {i} out of range for {n} nodes",
                        kind.name()
                    )));
                }
                if seen[i] {
                    return Err(Error::Data(format!(
                        "node {i} appears in more than one split slot"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(&i) = self.train.iter().find(|&&i| labels[i].is_none()) {
            return Err(Error::Data(format!("train node {i} is unlabeled")));
        }
        Ok(())
    }
}

/// Node-classification dataset: features, labels, undirected edges and splits.
///
/// Edges are stored canonically: `i < j`, sorted, without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    features: Tensor2,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    splits: Splits,
}

impl Graph {
    /// Validates and canonicalizes. Self-loops and out-of-range endpoints are rejected;
    /// duplicate and reversed pairs collapse to one edge.
    pub fn new(
        features: Tensor2,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        edges: Vec<(usize, usize)>,
        splits: Splits,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::Data(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= num_classes) {
            return Err(Error::Data(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        if !features.all_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        let edges = canonical_edges(n, &edges)?;
        splits.validate(n, &labels)?;
        Ok(Graph {
            features,
            labels,
            num_classes,
            edges,
            splits,
        })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Tensor2 {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(self.n(), &self.labels)?;
        self.splits = splits;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<Option<usize>>) -> Result<Self> {
        Graph::new(
            std::mem::take(&mut self.features),
            labels,
            self.num_classes,
            std::mem::take(&mut self.edges),
            std::mem::take(&mut self.splits),
        )
    }

    /// Scales every feature row to unit L1 norm; all-zero rows stay zero.
    pub fn row_normalized(&self) -> Graph {
        let mut g = self.clone();
        let cols = g.features.cols();
        for r in 0..g.features.rows() {
            let row = g.features.row_mut(r);
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            if s > 0.0 {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            debug_assert_eq!(row.len(), cols);
        }
        g
    }

    pub fn adjacency(&self) -> SparseMatrix {
        build_adjacency(self.n(), &self.edges).expect("graph edges validated at construction")
    }
}

fn canonical_edges(n: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(Error::Data(format!(
                "edge ({i}, {j}) has an endpoint outside [0, {n})"
            )));
        }
        if i == j {
            return Err(Error::Data(format!("self-loop on node {i}")));
        }
        out.push((i.min(j), i.max(j)));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Square CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::Data(format!(
                    "entry ({r}, {c}) outside a {n}x{n} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..n {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols[k]);
            let mut k = 0;
            while k < order.len() {
                let c = cols[order[k]];
                let mut v = 0.0;
                while k < order.len() && cols[order[k]] == c {
                    v += vals[order[k]];
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(m: &Tensor2) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::shape(
                "SparseMatrix::from_dense",
                format!("{:?} is not square", m.shape()),
            ));
        }
        let mut trip = Vec::new();
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if v != 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        SparseMatrix::from_triplets(m.rows(), &trip)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn to_dense(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(i, c, v);
            }
        }
        out
    }

    /// Exact structural and numeric symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
        })
    }

    /// `self · x` for a dense right operand.
    pub fn matmul_dense(&self, x: &Tensor2) -> Result<Tensor2> {
        if x.rows() != self.n {
            return Err(Error::shape(
                "SparseMatrix::matmul_dense",
                format!("{}x{} · {}x{}", self.n, self.n, x.rows(), x.cols()),
            ));
        }
        let w = x.cols();
        let mut out = Tensor2::zeros(self.n, w);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let o = out.row_mut(i);
            for (&c, &v) in cols.iter().zip(vals) {
                for (ov, &xv) in o.iter_mut().zip(x.row(c)) {
                    *ov += v * xv;
                }
            }
        }
        Ok(out)
    }

    /// Sparse-sparse product (Gustavson row-by-row), pruning |v| < `PRUNE_EPS`.
    pub fn matmul_sparse(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n != other.n {
            return Err(Error::shape(
                "SparseMatrix::matmul_sparse",
                format!("{} vs {}", self.n, other.n),
            ));
        }
        let n = self.n;
        let mut acc = vec![0.0f64; n];
        let mut touched = vec![false; n];
        let mut cols_buf: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            cols_buf.clear();
            let (a_cols, a_vals) = self.row(i);
            for (&k, &a) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &b) in b_cols.iter().zip(b_vals) {
                    if !touched[j] {
                        touched[j] = true;
                        cols_buf.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols_buf.sort_unstable();
            for &j in &cols_buf {
                let v = acc[j];
                if v.abs() >= PRUNE_EPS {
                    col_idx.push(j);
                    values.push(v);
                }
                acc[j] = 0.0;
                touched[j] = false;
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    fn pruned(&self) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if v.abs() >= PRUNE_EPS {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Symmetric binary adjacency with a zero diagonal.
pub fn build_adjacency(n: usize, edges: &[(usize, usize)]) -> Result<SparseMatrix> {
    let canon = canonical_edges(n, edges)?;
    let mut trip = Vec::with_capacity(canon.len() * 2);
    for (i, j) in canon {
        trip.push((i, j, 1.0));
        trip.push((j, i, 1.0));
    }
    SparseMatrix::from_triplets(n, &trip)
}

/// `Â = D^{-1/2} (A + I) D^{-1/2}` with `D` the degree matrix of `A + I`.
///
/// Each entry is computed as `a_ij / sqrt(d_i · d_j)`, which is symmetric in
/// `i, j` bit for bit.
pub fn normalize_adjacency(a: &SparseMatrix) -> SparseMatrix {
    let n = a.n;
    let degree: Vec<f64> = (0..n)
        .map(|i| {
            let (cols, vals) = a.row(i);
            let off: f64 = cols
                .iter()
                .zip(vals)
                .filter(|(&c, _)| c != i)
                .map(|(_, v)| v)
                .sum();
            off + 1.0
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz() + n);
    let mut values = Vec::with_capacity(a.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut diag_done = false;
        let di = degree[i];
        for (&c, &v) in cols.iter().zip(vals) {
            if c == i {
                continue;
            }
            if !diag_done && c > i {
                col_idx.push(i);
                values.push(1.0 / di);
                diag_done = true;
            }
            col_idx.push(c);
            values.push(v / (di * degree[c]).sqrt());
        }
        if !diag_done {
            col_idx.push(i);
            values.push(1.0 / di);
        }
        row_ptr.push(col_idx.len());
    }
    SparseMatrix {
        n,
        row_ptr,
        col_idx,
        values,
    }
}

/// `Â^r` by repeated sparse products.
pub fn sparse_power(a_hat: &SparseMatrix, r: u32) -> Result<SparseMatrix> {
    if r < 1 {
        return Err(Error::InvalidArgument(
            "adjacency power must be >= 1".into(),
        ));
    }
    let mut acc = a_hat.pruned();
    for _ in 1..r {
        acc = acc.matmul_sparse(a_hat)?;
    }
    Ok(acc)
}

/// Dense `B×B` block `m[ids, ids]`.
pub fn extract_submatrix(m: &SparseMatrix, ids: &[usize]) -> Result<Tensor2> {
    let mut pos = vec![usize::MAX; m.n];
    for (p, &i) in ids.iter().enumerate() {
        if i >= m.n {
            return Err(Error::InvalidArgument(format!(
                "index {i} outside [0, {})",
                m.n
            )));
        }
        if pos[i] != usize::MAX {
            return Err(Error::InvalidArgument(format!("duplicate index {i}")));
        }
        pos[i] = p;
    }
    let b = ids.len();
    let mut out = Tensor2::zeros(b, b);
    for (p, &i) in ids.iter().enumerate() {
        let (cols, vals) = m.row(i);
        let row = out.row_mut(p);
        for (&c, &v) in cols.iter().zip(vals) {
            let q = pos[c];
            if q != usize::MAX {
                row[q] = v;
            }
        }
    }
    Ok(out)
}

/// Randomly rewires a binary symmetric adjacency.
///
/// Every strictly upper-triangular position is selected independently with
/// probability `delta`; a selected position is overwritten by a fair coin.
/// The result is mirrored, so it stays symmetric with an empty diagonal.
/// Selected positions are enumerated by geometric skips, so the cost is
/// proportional to `delta · n²` rather than `n²`.
pub fn corrupt_adjacency(a: &SparseMatrix, delta: f64, rng: &mut Rng) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "corruption ratio {delta} outside [0, 1]"
        )));
    }
    if delta == 0.0 {
        return Ok(a.clone());
    }
    let n = a.n;
    let total = n * n.saturating_sub(1) / 2;
    let log_keep = (1.0 - delta).ln();
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut selected: Vec<(usize, bool)> = Vec::new();
    // Linear index t walks the upper triangle row-major: (0,1) (0,2) .. (1,2) ..
    let mut t = 0usize;
    let mut row_start = 0usize;
    let mut pending = next_selected(&mut t, total, delta, log_keep, rng);
    for i in 0..n {
        let row_len = n - i - 1;
        selected.clear();
        while let Some(pos) = pending {
            if pos >= row_start + row_len {
                break;
            }
            let coin = rng.next_u64() >> 63 == 1;
            selected.push((i + 1 + (pos - row_start), coin));
            pending = next_selected(&mut t, total, delta, log_keep, rng);
        }
        let (cols, _) = a.row(i);
        let original = cols.iter().copied().filter(|&j| j > i);
        upper[i] = merge_row(original, &selected);
        row_start += row_len;
    }
    Ok(symmetric_from_upper(n, &upper))
}

/// Next selected upper-triangle position at or after `*t`, advancing `*t` past it.
fn next_selected(
    t: &mut usize,
    total: usize,
    delta: f64,
    log_keep: f64,
    rng: &mut Rng,
) -> Option<usize> {
    let skip = if delta >= 1.0 {
        0
    } else {
        let u = 1.0 - rng.uniform(); // (0, 1]
        let s = (u.ln() / log_keep).floor();
        if s >= total as f64 {
            *t = total;
            return None;
        }
        s as usize
    };
    let pos = t.checked_add(skip).filter(|&p| p < total)?;
    *t = pos + 1;
    Some(pos)
}

/// Original columns minus selected-with-tails plus selected-with-heads, sorted.
fn merge_row(original: impl Iterator<Item = usize>, selected: &[(usize, bool)]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut orig = original.peekable();
    let mut sel = selected.iter().peekable();
    loop {
        match (orig.peek().copied(), sel.peek().copied()) {
            (None, None) => break,
            (Some(o), None) => {
                out.push(o);
                orig.next();
            }
            (None, Some(&(c, coin))) => {
                if coin {
                    out.push(c);
                }
                sel.next();
            }
            (Some(o), Some(&(c, coin))) => {
                if o < c {
                    out.push(o);
                    orig.next();
                } else {
                    if o == c {
                        orig.next();
                    }
                    if coin {
                        out.push(c);
                    }
                    sel.next();
                }
            }
        }
    }
    out
}

/// Unit-weight symmetric CSR from sorted strictly-upper rows.
fn symmetric_from_upper(n: usize, upper: &[Vec<usize>]) -> SparseMatrix {
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in upper.iter().enumerate() {
        for &j in row {
            lower[j].push(i);
        }
    }
    let nnz: usize = upper.iter().map(Vec::len).sum::<usize>() * 2;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for i in 0..n {
        col_idx.extend_from_slice(&lower[i]);
        col_idx.extend_from_slice(&upper[i]);
        lower[i] = Vec::new();
        row_ptr.push(col_idx.len());
    }
    let values = vec![1.0; col_idx.len()];
    SparseMatrix {
        n,
        row_ptr,
        col_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_normalize(a: &Tensor2) -> Tensor2 {
        let n = a.rows();
        let mut ai = a.clone();
        for i in 0..n {
            ai.set(i, i, ai.get(i, i) + 1.0);
        }
        let deg: Vec<f64> = (0..n).map(|i| ai.row(i).iter().sum()).collect();
        let mut out = Tensor2::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, ai.get(i, j) / deg[i].sqrt() / deg[j].sqrt());
            }
        }
        out
    }

    fn dense_mul(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        let n = a.rows();
        let mut out = Tensor2::zeros(n, b.cols());
        for i in 0..n {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn random_edges(n: usize, p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.bernoulli(p) {
                    e.push((i, j));
                }
            }
        }
        e
    }

    #[test]
    fn adjacency_small_cases() {
        let a = build_adjacency(3, &[]).unwrap();
        assert_eq!(a.to_dense(), Tensor2::zeros(3, 3));
        let a = build_adjacency(2, &[(0, 1)]).unwrap();
        assert_eq!(
            a.to_dense(),
            Tensor2::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
        );
        let a = build_adjacency(3, &[(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(a.nnz(), 4);
        assert!(a.is_symmetric());
    }

    #[test]
    fn adjacency_rejects_out_of_range() {
        assert!(matches!(build_adjacency(2, &[(0, 2)]), Err(Error::Data(_))));
    }

    #[test]
    fn normalize_small_cases() {
        let a = build_adjacency(1, &[]).unwrap();
        assert_eq!(
            normalize_adjacency(&a).to_dense(),
            Tensor2::from_rows(&[vec![1.0]])
        );
        let a = build_adjacency(2, &[(0, 1)]).unwrap();
        let want = Tensor2::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(normalize_adjacency(&a).to_dense().max_abs_diff(&want) <= 1e-15);
    }

    #[test]
    fn normalize_matches_dense_oracle() {
        let mut rng = Rng::new(21);
        for _ in 0..20 {
            let edges = random_edges(6, 0.4, &mut rng);
            let a = build_adjacency(6, &edges).unwrap();
            let got = normalize_adjacency(&a);
            assert!(got.is_symmetric());
            assert!(got.to_dense().max_abs_diff(&dense_normalize(&a.to_dense())) <= 1e-12);
            for i in 0..6 {
                assert!(got.get(i, i) > 0.0);
            }
        }
    }

    #[test]
    fn power_matches_dense_oracle() {
        let mut rng = Rng::new(22);
        for _ in 0..20 {
            let edges = random_edges(6, 0.4, &mut rng);
            let a_hat = normalize_adjacency(&build_adjacency(6, &edges).unwrap());
            let dense = a_hat.to_dense();
            let mut want = dense.clone();
            for r in 2..=3 {
                want = dense_mul(&want, &dense);
                let got = sparse_power(&a_hat, r).unwrap().to_dense();
                assert!(got.max_abs_diff(&want) <= 1e-10);
            }
        }
    }

    #[test]
    fn power_edge_cases() {
        let id = SparseMatrix::identity(5);
        for r in 1..5 {
            assert_eq!(sparse_power(&id, r).unwrap(), id);
        }
        let a_hat = normalize_adjacency(&build_adjacency(3, &[(0, 1)]).unwrap());
        assert_eq!(sparse_power(&a_hat, 1).unwrap(), a_hat);
        assert!(sparse_power(&a_hat, 0).is_err());
    }

    #[test]
    fn regular_graph_powers_are_stochastic() {
        // 6-cycle: every node has degree 2, so Â rows sum to one.
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let a_hat = normalize_adjacency(&build_adjacency(6, &edges).unwrap());
        for r in 1..=4 {
            let p = sparse_power(&a_hat, r).unwrap();
            for i in 0..6 {
                assert!((p.row_sum(i) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn submatrix_lookup() {
        let mut rng = Rng::new(23);
        let dense =
            Tensor2::random_uniform(10, 10, -1.0, 1.0, &mut rng)
                .map(|v| if v > 0.3 { v } else { 0.0 });
        let m = SparseMatrix::from_dense(&dense).unwrap();
        let all: Vec<usize> = (0..10).collect();
        assert_eq!(extract_submatrix(&m, &all).unwrap(), dense);
        assert_eq!(
            extract_submatrix(&m, &[4]).unwrap(),
            Tensor2::from_rows(&[vec![dense.get(4, 4)]])
        );
        let ids = [7, 2, 9, 0];
        let sub = extract_submatrix(&m, &ids).unwrap();
        for (p, &i) in ids.iter().enumerate() {
            for (q, &j) in ids.iter().enumerate() {
                assert_eq!(sub.get(p, q), dense.get(i, j));
            }
        }
        assert!(extract_submatrix(&m, &[1, 1]).is_err());
        assert!(extract_submatrix(&m, &[10]).is_err());
    }

    #[test]
    fn corruption_zero_is_identity() {
        let mut rng = Rng::new(24);
        let a = build_adjacency(30, &random_edges(30, 0.1, &mut rng)).unwrap();
        assert_eq!(corrupt_adjacency(&a, 0.0, &mut rng).unwrap(), a);
        assert!(corrupt_adjacency(&a, 1.5, &mut rng).is_err());
        assert!(corrupt_adjacency(&a, -0.1, &mut rng).is_err());
    }

    #[test]
    fn corruption_full_is_fair_coin() {
        let mut rng = Rng::new(25);
        let a = build_adjacency(100, &[]).unwrap();
        let c = corrupt_adjacency(&a, 1.0, &mut rng).unwrap();
        let frac = (c.nnz() / 2) as f64 / (100.0 * 99.0 / 2.0);
        assert!((frac - 0.5).abs() <= 0.05, "{frac}");
        assert!(c.is_symmetric());
        assert!((0..100).all(|i| c.get(i, i) == 0.0));
    }

    #[test]
    fn corruption_rate_matches_delta() {
        // On an empty graph every selected position becomes an edge with p = 1/2,
        // so the edge density is delta / 2.
        let a = build_adjacency(400, &[]).unwrap();
        let mut rng = Rng::new(26);
        let positions = 400.0 * 399.0 / 2.0;
        for delta in [0.01, 0.1, 0.5] {
            let c = corrupt_adjacency(&a, delta, &mut rng).unwrap();
            let got = (c.nnz() / 2) as f64 / positions;
            let p = delta / 2.0;
            let sigma = (p * (1.0 - p) / positions).sqrt();
            assert!((got - p).abs() < 5.0 * sigma, "delta {delta}: {got}");
        }
    }

    #[test]
    fn graph_validation() {
        let f = Tensor2::zeros(3, 2);
        let ok = Graph::new(
            f.clone(),
            vec![Some(0), None, Some(1)],
            2,
            vec![(1, 0), (0, 1)],
            Splits::default(),
        )
        .unwrap();
        assert_eq!(ok.edges(), &[(0, 1)]);
        assert!(Graph::new(
            f.clone(),
            vec![Some(2), None, None],
            2,
            vec![],
            Splits::default()
        )
        .is_err());
        assert!(Graph::new(f.clone(), vec![None; 3], 2, vec![(0, 0)], Splits::default()).is_err());
        let overlap = Splits {
            train: vec![0],
            val: vec![0],
            test: vec![],
        };
        assert!(Graph::new(f.clone(), vec![Some(0); 3], 2, vec![], overlap).is_err());
        let unlabeled_train = Splits {
            train: vec![1],
            ..Default::default()
        };
        assert!(Graph::new(f, vec![Some(0), None, Some(1)], 2, vec![], unlabeled_train).is_err());
    }
}
