//! Dense row-major matrices and the finite-difference gradient checker.
//!
//! All products use a fixed loop order, so results are reproducible bit for
//! bit across runs. Zero entries of the left operand are skipped in the
//! `matmul` and `matmul_tn` kernels; bag-of-words feature matrices are mostly
//! zeros and this is where the first layer spends its time.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor2({}x{}", self.rows, self.cols)?;
        if self.data.len() <= 64 {
            write!(f, ", {:?}", self.data)?;
        }
        write!(f, ")")
    }
}

impl Default for Tensor2 {
    fn default() -> Self {
        Tensor2::zeros(0, 0)
    }
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor2::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Tensor2::from_vec",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    /// Builds from nested rows; panics on ragged input (test and fixture helper).
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor2 {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn random_uniform(
        rows: usize,
        cols: usize,
        lo: f64,
        hi: f64,
        rng: &mut crate::Rng,
    ) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.uniform_range(lo, hi))
            .collect();
        Tensor2 { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Gathers the listed rows, in order.
    pub fn select_rows(&self, ids: &[usize]) -> Tensor2 {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &i in ids {
            data.extend_from_slice(self.row(i));
        }
        Tensor2 {
            rows: ids.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Tensor2) -> Result<Tensor2> {
        self.check_same_shape("add", other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_assign(&mut self, other: &Tensor2) -> Result<()> {
        self.check_same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Adds `bias[c]` to every entry of column `c`.
    pub fn add_row_vector(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols.max(1)) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Column sums, i.e. `1ᵀ · self`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Tensor2) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Index of the largest entry per row; ties resolve to the lowest index.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    fn check_same_shape(&self, op: &'static str, other: &Tensor2) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(())
    }
}

/// `a · b`.
///
/// Every output entry is accumulated over `k` in increasing order regardless
/// of which kernel runs, so results do not depend on blocking. Operands that
/// are mostly zeros (bag-of-words features) take a path that skips them.
pub fn matmul(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} · {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Tensor2::zeros(a.rows, b.cols);
    if out.data.is_empty() {
        return Ok(out);
    }
    if mostly_zero(a) {
        sparse_left(a, b, &mut out);
    } else {
        gemm::gemm(a.rows, a.cols, b.cols, &a.data, &b.data, &mut out.data);
    }
    Ok(out)
}

/// `aᵀ · b`.
pub fn matmul_tn(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.rows != b.rows {
        return Err(Error::shape(
            "matmul_tn",
            format!("({}x{})ᵀ · {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let n = b.cols;
    let mut out = Tensor2::zeros(a.cols, n);
    if out.data.is_empty() {
        return Ok(out);
    }
    if mostly_zero(a) {
        sparse_left_t(a, b, &mut out);
    } else {
        let at = a.transpose();
        gemm::gemm(at.rows, at.cols, n, &at.data, &b.data, &mut out.data);
    }
    Ok(out)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.cols != b.cols {
        return Err(Error::shape(
            "matmul_nt",
            format!("{}x{} · ({}x{})ᵀ", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    matmul(a, &b.transpose())
}

/// Row-compressed copy of a mostly-zero matrix. Products with it cost
/// time in proportion to the stored entries rather than the full width.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrRows {
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrRows {
    pub fn from_dense(t: &Tensor2) -> CsrRows {
        let mut out = CsrRows {
            cols: t.cols,
            row_ptr: Vec::with_capacity(t.rows + 1),
            col_idx: Vec::new(),
            values: Vec::new(),
        };
        out.row_ptr.push(0);
        for r in 0..t.rows {
            for (k, &v) in t.row(r).iter().enumerate() {
                if v != 0.0 {
                    out.col_idx.push(k as u32);
                    out.values.push(v);
                }
            }
            out.row_ptr.push(out.values.len());
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn select_rows(&self, ids: &[usize]) -> CsrRows {
        let mut out = CsrRows {
            cols: self.cols,
            row_ptr: Vec::with_capacity(ids.len() + 1),
            col_idx: Vec::new(),
            values: Vec::new(),
        };
        out.row_ptr.push(0);
        for &i in ids {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            out.col_idx.extend_from_slice(&self.col_idx[a..b]);
            out.values.extend_from_slice(&self.values[a..b]);
            out.row_ptr.push(out.values.len());
        }
        out
    }

    pub fn to_dense(&self) -> Tensor2 {
        let mut t = Tensor2::zeros(self.rows(), self.cols);
        for r in 0..self.rows() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.set(r, self.col_idx[p] as usize, self.values[p]);
            }
        }
        t
    }
}

/// `a · b` for a row-compressed `a`; bitwise equal to `matmul(&a.to_dense(), b)`.
pub fn matmul_csr(a: &CsrRows, b: &Tensor2) -> Result<Tensor2> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul_csr",
            format!("{}x{} · {}x{}", a.rows(), a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Tensor2::zeros(a.rows(), b.cols);
    if !out.data.is_empty() {
        csr_left(a, b, &mut out);
    }
    Ok(out)
}

fn csr_left(a: &CsrRows, b: &Tensor2, out: &mut Tensor2) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            unsafe { csr_left_avx2(a, b, out) };
            return;
        }
    }
    csr_left_body(a, b, out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn csr_left_avx2(a: &CsrRows, b: &Tensor2, out: &mut Tensor2) {
    csr_left_body(a, b, out);
}

#[inline(always)]
fn csr_left_body(a: &CsrRows, b: &Tensor2, out: &mut Tensor2) {
    let n = b.cols;
    for (w, o_row) in a.row_ptr.windows(2).zip(out.data.chunks_exact_mut(n)) {
        for (&k, &a_ik) in a.col_idx[w[0]..w[1]].iter().zip(&a.values[w[0]..w[1]]) {
            let start = k as usize * n;
            for (o, &bv) in o_row.iter_mut().zip(&b.data[start..start + n]) {
                *o += a_ik * bv;
            }
        }
    }
}

/// Whether more than half of the entries in a sample of whole rows are zero.
/// Both product paths give the same result, so the sample only picks the faster one.
fn mostly_zero(a: &Tensor2) -> bool {
    const SAMPLE_ROWS: usize = 64;
    let step = (a.rows / SAMPLE_ROWS).max(1);
    let (mut zeros, mut seen) = (0usize, 0usize);
    for r in (0..a.rows).step_by(step) {
        let row = a.row(r);
        zeros += row.iter().filter(|&&v| v == 0.0).count();
        seen += row.len();
    }
    zeros * 2 > seen
}

macro_rules! avx2_dispatch {
    ($name:ident, $wide:ident, $body:ident) => {
        fn $name(a: &Tensor2, b: &Tensor2, out: &mut Tensor2) {
            #[cfg(target_arch = "x86_64")]
            {
                if std::arch::is_x86_feature_detected!("avx2") {
                    // SAFETY: the feature was detected at runtime.
                    unsafe { $wide(a, b, out) };
                    return;
                }
            }
            $body(a, b, out);
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        unsafe fn $wide(a: &Tensor2, b: &Tensor2, out: &mut Tensor2) {
            $body(a, b, out);
        }
    };
}

avx2_dispatch!(sparse_left, sparse_left_avx2, sparse_left_body);
avx2_dispatch!(sparse_left_t, sparse_left_t_avx2, sparse_left_t_body);

/// Writes the positions of the nonzeros of `row` to the front of `idx`
/// and returns their count. All-zero chunks are skipped with one test.
#[inline(always)]
fn compact_nonzeros(row: &[f64], idx: &mut [u32]) -> usize {
    const CHUNK: usize = 16;
    let mut cnt = 0;
    for (c, chunk) in row.chunks(CHUNK).enumerate() {
        if !chunk.iter().fold(false, |any, &v| any | (v != 0.0)) {
            continue;
        }
        for (k, &v) in chunk.iter().enumerate() {
            idx[cnt] = (c * CHUNK + k) as u32;
            cnt += (v != 0.0) as usize;
        }
    }
    cnt
}

/// `out += a · b`, skipping zero entries of `a`.
#[inline(always)]
fn sparse_left_body(a: &Tensor2, b: &Tensor2, out: &mut Tensor2) {
    let n = b.cols;
    let mut idx = vec![0u32; a.cols];
    for (a_row, o_row) in a
        .data
        .chunks_exact(a.cols.max(1))
        .zip(out.data.chunks_exact_mut(n))
    {
        let cnt = compact_nonzeros(a_row, &mut idx);
        for &k in &idx[..cnt] {
            let k = k as usize;
            let a_ik = a_row[k];
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += a_ik * bv;
            }
        }
    }
}

/// `out += aᵀ · b`, skipping zero entries of `a`.
#[inline(always)]
fn sparse_left_t_body(a: &Tensor2, b: &Tensor2, out: &mut Tensor2) {
    let n = b.cols;
    let mut idx = vec![0u32; a.cols];
    for r in 0..a.rows {
        let b_row = &b.data[r * n..(r + 1) * n];
        let a_row = a.row(r);
        let cnt = compact_nonzeros(a_row, &mut idx);
        for &k in &idx[..cnt] {
            let k = k as usize;
            let a_rk = a_row[k];
            let o_row = &mut out.data[k * n..(k + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += a_rk * bv;
            }
        }
    }
}

mod gemm {
    //! Blocked dense product with a 4x8 register tile over packed panels of `b`.

    const MR: usize = 4;
    const NR: usize = 8;
    const KC: usize = 256;
    const MC: usize = 64;

    /// `out += a · b`, row-major `m×k` and `k×n`.
    pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the feature was detected at runtime.
                unsafe { gemm_avx2(m, k, n, a, b, out) };
                return;
            }
        }
        gemm_generic(m, k, n, a, b, out);
    }

    // Only widens vectors; no fused multiply-add, so results match the generic path.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn gemm_avx2(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        gemm_generic(m, k, n, a, b, out);
    }

    #[inline(always)]
    fn gemm_generic(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
        let panels = n.div_ceil(NR);
        let mut b_pack = vec![0.0; KC * panels * NR];
        let mut a_pack = vec![0.0; KC * MC];
        for k0 in (0..k).step_by(KC) {
            let kc = KC.min(k - k0);
            for p in 0..panels {
                let j0 = p * NR;
                let w = NR.min(n - j0);
                let dst = &mut b_pack[p * KC * NR..(p + 1) * KC * NR];
                for kk in 0..kc {
                    let row = &mut dst[kk * NR..(kk + 1) * NR];
                    row[..w].copy_from_slice(&b[(k0 + kk) * n + j0..(k0 + kk) * n + j0 + w]);
                    row[w..].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            for i0 in (0..m).step_by(MC) {
                let mc = MC.min(m - i0);
                let tiles = mc.div_ceil(MR);
                for t in 0..tiles {
                    let dst = &mut a_pack[t * KC * MR..(t + 1) * KC * MR];
                    for r in 0..MR {
                        let i = i0 + t * MR + r;
                        if i < i0 + mc {
                            let src = &a[i * k + k0..i * k + k0 + kc];
                            for (kk, &v) in src.iter().enumerate() {
                                dst[kk * MR + r] = v;
                            }
                        } else {
                            (0..kc).for_each(|kk| dst[kk * MR + r] = 0.0);
                        }
                    }
                }
                for p in 0..panels {
                    let j0 = p * NR;
                    let w = NR.min(n - j0);
                    let panel = &b_pack[p * KC * NR..p * KC * NR + kc * NR];
                    for t in 0..tiles {
                        let h = MR.min(mc - t * MR);
                        let i = i0 + t * MR;
                        let mut acc = [[0.0f64; NR]; MR];
                        for r in 0..h {
                            acc[r][..w]
                                .copy_from_slice(&out[(i + r) * n + j0..(i + r) * n + j0 + w]);
                        }
                        kernel(&a_pack[t * KC * MR..t * KC * MR + kc * MR], panel, &mut acc);
                        for r in 0..h {
                            out[(i + r) * n + j0..(i + r) * n + j0 + w]
                                .copy_from_slice(&acc[r][..w]);
                        }
                    }
                }
            }
        }
    }

    #[inline(always)]
    fn kernel(a: &[f64], b: &[f64], acc_out: &mut [[f64; NR]; MR]) {
        let mut acc = *acc_out;
        for (av, bv) in a.chunks_exact(MR).zip(b.chunks_exact(NR)) {
            let av: &[f64; MR] = av.try_into().unwrap();
            let bv: &[f64; NR] = bv.try_into().unwrap();
            for r in 0..MR {
                for c in 0..NR {
                    acc[r][c] += av[r] * bv[c];
                }
            }
        }
        *acc_out = acc;
    }
}

/// Dot product with four interleaved accumulators (fixed order, vectorizes).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Default central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Compares an analytic gradient with central differences of `f` at `x`.
///
/// Returns `max_i |fd_i - analytic_i| / max(1, |analytic_i|)`.
pub fn grad_check<F>(mut f: F, x: &Tensor2, analytic_grad: &Tensor2, h: f64) -> Result<f64>
where
    F: FnMut(&Tensor2) -> f64,
{
    if x.shape() != analytic_grad.shape() {
        return Err(Error::shape(
            "grad_check",
            format!("x {:?} vs grad {:?}", x.shape(), analytic_grad.shape()),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grad_check step must be > 0, got {h}"
        )));
    }
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for idx in 0..x.len() {
        let orig = probe.data[idx];
        probe.data[idx] = orig + h;
        let plus = f(&probe);
        probe.data[idx] = orig - h;
        let minus = f(&probe);
        probe.data[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "grad_check objective at entry {idx}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * h);
        let analytic = analytic_grad.data[idx];
        let rel = (numeric - analytic).abs() / analytic.abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn naive(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
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

    #[test]
    fn identity_product_is_exact() {
        let mut rng = Rng::new(5);
        let m = Tensor2::random_uniform(3, 4, -2.0, 2.0, &mut rng);
        assert_eq!(matmul(&Tensor2::identity(3), &m).unwrap(), m);
        let i4 = Tensor2::identity(4);
        let once = matmul(&m, &i4).unwrap();
        assert_eq!(matmul(&once, &i4).unwrap(), m);
    }

    #[test]
    fn zero_left_operand_gives_zeros() {
        let mut rng = Rng::new(6);
        let m = Tensor2::random_uniform(3, 4, -1.0, 1.0, &mut rng);
        assert_eq!(
            matmul(&Tensor2::zeros(2, 3), &m).unwrap(),
            Tensor2::zeros(2, 4)
        );
    }

    #[test]
    fn products_match_triple_loop() {
        let mut rng = Rng::new(7);
        for _ in 0..20 {
            let a = Tensor2::random_uniform(4, 5, -1.0, 1.0, &mut rng);
            let b = Tensor2::random_uniform(5, 3, -1.0, 1.0, &mut rng);
            assert!(matmul(&a, &b).unwrap().max_abs_diff(&naive(&a, &b)) <= 1e-12);
            let at = a.transpose();
            assert!(matmul_tn(&at, &b).unwrap().max_abs_diff(&naive(&a, &b)) <= 1e-12);
            let bt = b.transpose();
            assert!(matmul_nt(&a, &bt).unwrap().max_abs_diff(&naive(&a, &b)) <= 1e-12);
        }
    }

    #[test]
    fn csr_product_is_bitwise_dense() {
        let mut rng = Rng::new(21);
        for &(m, k, n) in &[(30, 200, 17), (1, 5, 1), (12, 9, 64)] {
            let mut a = Tensor2::random_uniform(m, k, -1.0, 1.0, &mut rng);
            a.data_mut().iter_mut().for_each(|v| {
                if rng.uniform() < 0.9 {
                    *v = 0.0
                }
            });
            let b = Tensor2::random_uniform(k, n, -1.0, 1.0, &mut rng);
            let csr = CsrRows::from_dense(&a);
            assert_eq!(csr.to_dense(), a);
            assert_eq!(matmul_csr(&csr, &b).unwrap(), naive(&a, &b));
            let ids = [m - 1, 0];
            assert_eq!(csr.select_rows(&ids).to_dense(), a.select_rows(&ids));
        }
        assert!(matmul_csr(
            &CsrRows::from_dense(&Tensor2::zeros(2, 3)),
            &Tensor2::zeros(4, 1)
        )
        .is_err());
    }

    #[test]
    fn blocked_kernel_is_bitwise_sequential() {
        // Shapes straddle every tile and block edge of the kernel.
        let mut rng = Rng::new(11);
        for (m, k, n) in [(70, 300, 19), (5, 513, 9), (129, 7, 33), (1, 1, 1)] {
            let a = Tensor2::random_uniform(m, k, -1.0, 1.0, &mut rng);
            let b = Tensor2::random_uniform(k, n, -1.0, 1.0, &mut rng);
            let want = naive(&a, &b);
            assert_eq!(matmul(&a, &b).unwrap(), want);
            assert_eq!(matmul_tn(&a.transpose(), &b).unwrap(), want);
            assert_eq!(matmul_nt(&a, &b.transpose()).unwrap(), want);
        }
    }

    #[test]
    fn sparse_operand_path_matches_oracle() {
        let mut rng = Rng::new(12);
        let mut a = Tensor2::random_uniform(40, 60, -1.0, 1.0, &mut rng);
        for v in a.data_mut() {
            if rng.bernoulli(0.9) {
                *v = 0.0;
            }
        }
        let b = Tensor2::random_uniform(60, 17, -1.0, 1.0, &mut rng);
        assert!(matmul(&a, &b).unwrap().max_abs_diff(&naive(&a, &b)) <= 1e-12);
        assert!(
            matmul_tn(&a.transpose(), &b)
                .unwrap()
                .max_abs_diff(&naive(&a, &b))
                <= 1e-12
        );
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = Tensor2::zeros(2, 3);
        let b = Tensor2::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape { .. })));
        assert!(matmul_tn(&a, &Tensor2::zeros(3, 1)).is_err());
        assert!(matmul_nt(&a, &Tensor2::zeros(3, 2)).is_err());
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor2::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Tensor2::from_vec(2, 2, vec![1.0; 4]).is_ok());
    }

    #[test]
    fn argmax_ties_take_lowest_index() {
        let t = Tensor2::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 3.0, 3.0]]);
        assert_eq!(t.argmax_rows(), vec![0, 1]);
    }

    #[test]
    fn grad_check_quadratic_is_exact() {
        let mut rng = Rng::new(11);
        let x = Tensor2::random_uniform(3, 4, -2.0, 2.0, &mut rng);
        let err = grad_check(|t| 0.5 * t.frobenius_sq(), &x, &x, GRAD_CHECK_STEP).unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn grad_check_flags_wrong_gradient() {
        let mut rng = Rng::new(12);
        let x = Tensor2::random_uniform(3, 4, 1.0, 2.0, &mut rng);
        let wrong = x.scale(2.0);
        let err = grad_check(|t| 0.5 * t.frobenius_sq(), &x, &wrong, GRAD_CHECK_STEP).unwrap();
        // |x - 2x| / max(1, |2x|) = 1/2 once |x| >= 1/2.
        assert!((err - 0.5).abs() < 1e-6, "{err}");
        assert!(err > 1e-5);
    }

    #[test]
    fn grad_check_rejects_non_finite_objective() {
        let x = Tensor2::filled(1, 2, 1.0);
        let r = grad_check(|_| f64::NAN, &x, &x, 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert!(grad_check(|t| t.sum(), &x, &x, 0.0).is_err());
    }
}
