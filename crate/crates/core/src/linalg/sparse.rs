//! Compressed-row complex sparse matrices.
//!
//! Operators on the lattice Hilbert spaces are built as COO triplet lists and
//! frozen into CSR. The only performance-critical path is matvec inside
//! Lanczos, which is row-parallel; everything else favours being obviously
//! correct over being fast.

use super::dense::{CMat, C64};
use rayon::prelude::*;

/// Immutable CSR matrix over Complex<f64>.
#[derive(Clone, Debug)]
pub struct CsMat {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

/// Triplet accumulator. Duplicate (row, col) entries sum on build.
#[derive(Clone, Debug)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u32, u32, C64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        assert!(nrows <= u32::MAX as usize && ncols <= u32::MAX as usize);
        CooBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        let mut b = Self::new(nrows, ncols);
        b.entries.reserve(cap);
        b
    }

    pub fn push(&mut self, row: usize, col: usize, val: C64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if val != C64::new(0.0, 0.0) {
            self.entries.push((row as u32, col as u32, val));
        }
    }

    /// Freeze into CSR. Entries are merged with a stable sort so the result
    /// is independent of insertion order once duplicates are summed.
    pub fn build(mut self) -> CsMat {
        self.entries
            .sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        let mut iter = self.entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > 0.0 {
                indptr[r as usize + 1] += 1;
                cols.push(c);
                vals.push(v);
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        CsMat {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            cols,
            vals,
        }
    }
}

impl CsMat {
    pub fn identity(n: usize) -> Self {
        let mut b = CooBuilder::with_capacity(n, n, n);
        for i in 0..n {
            b.push(i, i, C64::new(1.0, 0.0));
        }
        b.build()
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CooBuilder::new(nrows, ncols).build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row view as (cols, vals) slices.
    pub fn row(&self, i: usize) -> (&[u32], &[C64]) {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// y = A x, row-parallel.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let lo = self.indptr[i];
            let hi = self.indptr[i + 1];
            let mut acc = C64::new(0.0, 0.0);
            // Sequential accumulation per row keeps the sum order fixed.
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        });
    }

    pub fn matvec_alloc(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn scale(&self, s: C64) -> CsMat {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &CsMat) -> CsMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                for (c, v) in cols.iter().zip(vals) {
                    b.push(i, *c as usize, *v);
                }
            }
        }
        b.build()
    }

    pub fn sub(&self, other: &CsMat) -> CsMat {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn adjoint(&self) -> CsMat {
        let mut b = CooBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                b.push(*c as usize, i, v.conj());
            }
        }
        b.build()
    }

    pub fn matmul(&self, other: &CsMat) -> CsMat {
        assert_eq!(self.ncols, other.nrows);
        let mut b = CooBuilder::new(self.nrows, other.ncols);
        // Accumulate per output row with a dense scratch over touched columns.
        let mut scratch: Vec<C64> = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched: Vec<u32> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (acols, avals) = self.row(i);
            for (ac, av) in acols.iter().zip(avals) {
                let (bcols, bvals) = other.row(*ac as usize);
                for (bc, bv) in bcols.iter().zip(bvals) {
                    let cell = &mut scratch[*bc as usize];
                    if *cell == C64::new(0.0, 0.0) {
                        touched.push(*bc);
                    }
                    *cell += av * bv;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                b.push(i, c as usize, scratch[c as usize]);
                scratch[c as usize] = C64::new(0.0, 0.0);
            }
        }
        b.build()
    }

    /// Kronecker product self ⊗ other with row-major index convention:
    /// (i·p + k, j·q + l) for self (i,j) and other (k,l) of shape p×q.
    pub fn kron(&self, other: &CsMat) -> CsMat {
        let p = other.nrows;
        let q = other.ncols;
        let mut b = CooBuilder::with_capacity(
            self.nrows * p,
            self.ncols * q,
            self.nnz() * other.nnz(),
        );
        for i in 0..self.nrows {
            let (acols, avals) = self.row(i);
            for (ac, av) in acols.iter().zip(avals) {
                for k in 0..p {
                    let (bcols, bvals) = other.row(k);
                    for (bc, bv) in bcols.iter().zip(bvals) {
                        b.push(i * p + k, (*ac as usize) * q + (*bc as usize), av * bv);
                    }
                }
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c as usize)] = *v;
            }
        }
        m
    }

    pub fn from_dense(m: &CMat) -> CsMat {
        let mut b = CooBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > 0.0 {
                    b.push(i, j, m[(i, j)]);
                }
            }
        }
        b.build()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        self.sub(&self.adjoint()).max_abs() <= tol
    }

    /// Bitwise equality of shape, sparsity pattern, and stored values.
    pub fn identical(&self, other: &CsMat) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.indptr == other.indptr
            && self.cols == other.cols
            && self.vals.len() == other.vals.len()
            && self
                .vals
                .iter()
                .zip(other.vals.iter())
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::max_abs_entry;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CsMat {
        let mut b = CooBuilder::new(3, 3);
        b.push(0, 1, c(1.0, 2.0));
        b.push(2, 0, c(-0.5, 0.0));
        b.push(0, 1, c(0.5, 0.0)); // duplicate, sums to (1.5, 2.0)
        b.push(1, 1, c(3.0, 0.0));
        b.build()
    }

    #[test]
    fn duplicates_sum_and_order_is_canonical() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        let (cols, vals) = m.row(0);
        assert_eq!(cols, &[1]);
        assert_eq!(vals[0], c(1.5, 2.0));
    }

    #[test]
    fn build_is_insertion_order_independent() {
        let mut b = CooBuilder::new(2, 2);
        b.push(1, 0, c(2.0, 0.0));
        b.push(0, 0, c(1.0, 0.0));
        b.push(1, 1, c(4.0, 0.0));
        let m1 = b.build();
        let mut b = CooBuilder::new(2, 2);
        b.push(1, 1, c(4.0, 0.0));
        b.push(1, 0, c(2.0, 0.0));
        b.push(0, 0, c(1.0, 0.0));
        let m2 = b.build();
        assert_eq!(m1.cols, m2.cols);
        assert_eq!(m1.vals, m2.vals);
        assert_eq!(m1.indptr, m2.indptr);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let d = m.to_dense();
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let y = m.matvec_alloc(&x);
        let xd = crate::linalg::CVec::from_vec(x);
        let yd = &d * &xd;
        for i in 0..3 {
            assert!((y[i] - yd[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn matmul_matches_dense() {
        let m = sample();
        let prod = m.matmul(&m.adjoint());
        let dense = m.to_dense() * m.to_dense().adjoint();
        assert!(max_abs_entry(&(&prod.to_dense() - &dense)) < 1e-14);
    }

    #[test]
    fn kron_matches_dense_oracle() {
        let a = sample();
        let mut b = CooBuilder::new(2, 2);
        b.push(0, 1, c(0.0, 1.0));
        b.push(1, 0, c(1.0, 0.0));
        let b = b.build();
        let k = a.kron(&b);
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let mut expect = CMat::zeros(6, 6);
        for i in 0..3 {
            for j in 0..3 {
                for p in 0..2 {
                    for q in 0..2 {
                        expect[(i * 2 + p, j * 2 + q)] = ad[(i, j)] * bd[(p, q)];
                    }
                }
            }
        }
        assert!(max_abs_entry(&(&k.to_dense() - &expect)) < 1e-15);
    }

    #[test]
    fn adjoint_is_involutive_and_detects_hermitian() {
        let m = sample();
        let back = m.adjoint().adjoint();
        assert!(max_abs_entry(&(&back.to_dense() - &m.to_dense())) < 1e-15);
        let h = m.add(&m.adjoint());
        assert!(h.is_hermitian(1e-14));
        assert!(!m.is_hermitian(1e-14));
    }
}
