//! Sparse symmetric matrices and preordered Cholesky solves.

mod cholesky;
mod ordering;

pub use cholesky::{factorize, factorize_with, CholeskyFactor, Ordering};
pub use ordering::min_degree_order;

use std::io::Write;

use crate::error::{Error, Result};

/// Sparse matrix in compressed-row layout with sorted columns and no
/// duplicate entries. Square operators assembled symmetrically carry the
/// `symmetric` flag; extracted off-diagonal blocks may be rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    symmetric: bool,
}

impl SparseSymMatrix {
    /// Assemble a square matrix from (row, col, value) triplets, summing
    /// duplicates.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        symmetric: bool,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::Index(format!("triplet ({r}, {c}) out of range for n={n}")));
            }
            if !v.is_finite() {
                return Err(Error::Shape(format!("non-finite value at ({r}, {c})")));
            }
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let m = SparseSymMatrix {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            vals,
            symmetric,
        };
        if symmetric && !m.is_structurally_symmetric() {
            return Err(Error::Shape("matrix marked symmetric has an asymmetric pattern".into()));
        }
        Ok(m)
    }

    pub(crate) fn from_csr_unchecked(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
        symmetric: bool,
    ) -> Self {
        SparseSymMatrix {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            vals,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseSymMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
            symmetric: true,
        }
    }

    /// Dimension of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_symmetric_flag(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub(crate) fn vals_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                s += v * x[c];
            }
            y[i] = s;
        }
    }

    /// Matrix product against two column vectors stored as point pairs.
    pub fn matvec_pairs(&self, x: &[[f64; 2]], y: &mut [[f64; 2]]) {
        debug_assert_eq!(x.len(), self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut s = [0.0, 0.0];
            for (&c, &v) in cols.iter().zip(vals) {
                s[0] += v * x[c][0];
                s[1] += v * x[c][1];
            }
            y[i] = s;
        }
    }

    /// Quadratic form xᵀ A y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                s += v * y[c];
            }
            total += x[i] * s;
        }
        total
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            for &j in cols {
                let (jc, _) = self.row(j);
                if jc.binary_search(&i).is_err() {
                    return false;
                }
            }
        }
        true
    }

    /// Maximum of |A[i,j] − A[j,i]| over all entries of a square matrix.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Extract the block with the given rows and columns, relabeled
    /// consecutively in the order given. Index sets must not repeat.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<SparseSymMatrix> {
        let mut col_map: Vec<Option<usize>> = vec![None; self.ncols];
        for (new, &c) in cols.iter().enumerate() {
            if c >= self.ncols {
                return Err(Error::Index(format!("column {c} out of range")));
            }
            if col_map[c].replace(new).is_some() {
                return Err(Error::Index(format!("column {c} repeated")));
            }
        }
        let mut seen_row = vec![false; self.nrows];
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            if r >= self.nrows {
                return Err(Error::Index(format!("row {r} out of range")));
            }
            if std::mem::replace(&mut seen_row[r], true) {
                return Err(Error::Index(format!("row {r} repeated")));
            }
            scratch.clear();
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                if let Some(new) = col_map[c] {
                    scratch.push((new, v));
                }
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            col_idx,
            vals,
            symmetric: self.symmetric && rows == cols,
        })
    }

    /// a·A + b·B with merged sparsity patterns.
    pub fn add_scaled(a: f64, ma: &SparseSymMatrix, b: f64, mb: &SparseSymMatrix) -> Result<SparseSymMatrix> {
        if ma.nrows != mb.nrows || ma.ncols != mb.ncols {
            return Err(Error::Shape(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                ma.nrows, ma.ncols, mb.nrows, mb.ncols
            )));
        }
        let mut row_ptr = Vec::with_capacity(ma.nrows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..ma.nrows {
            let (ca, va) = ma.row(i);
            let (cb, vb) = mb.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let next_a = ca.get(p).copied().unwrap_or(usize::MAX);
                let next_b = cb.get(q).copied().unwrap_or(usize::MAX);
                if next_a < next_b {
                    col_idx.push(next_a);
                    vals.push(a * va[p]);
                    p += 1;
                } else if next_b < next_a {
                    col_idx.push(next_b);
                    vals.push(b * vb[q]);
                    q += 1;
                } else {
                    col_idx.push(next_a);
                    vals.push(a * va[p] + b * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            nrows: ma.nrows,
            ncols: ma.ncols,
            row_ptr,
            col_idx,
            vals,
            symmetric: ma.symmetric && mb.symmetric,
        })
    }

    /// Dense row-major copy, for small oracles and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                d[i * self.ncols + c] = v;
            }
        }
        d
    }
}

/// MatrixMarket coordinate export (symmetric matrices: lower triangle only).
pub fn write_matrix_market(m: &SparseSymMatrix, mut w: impl Write) -> std::io::Result<()> {
    if m.is_symmetric_flag() {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        let count = (0..m.nrows())
            .map(|i| m.row(i).0.iter().filter(|&&c| c <= i).count())
            .sum::<usize>();
        writeln!(w, "{} {} {}", m.nrows(), m.ncols(), count)?;
        for i in 0..m.nrows() {
            let (cols, vals) = m.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    writeln!(w, "{} {} {}", i + 1, c + 1, v)?;
                }
            }
        }
    } else {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
        for i in 0..m.nrows() {
            let (cols, vals) = m.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {}", i + 1, c + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseSymMatrix::from_triplets(
            3,
            vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (2, 0, 1.5), (2, 2, 1.0), (1, 1, 3.0)],
            true,
        )
        .unwrap();
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(0, 0), 2.0);
        let (cols, _) = m.row(0);
        assert_eq!(cols, &[0, 2]);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn submatrix_identity_block() {
        let id = SparseSymMatrix::identity(4);
        let sub = id.submatrix(&[0, 2], &[0, 2]).unwrap();
        assert_eq!(sub.dim(), 2);
        assert_eq!(sub.to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn submatrix_empty_rows_gives_0xk() {
        let id = SparseSymMatrix::identity(3);
        let sub = id.submatrix(&[], &[0, 1, 2]).unwrap();
        assert_eq!(sub.nrows(), 0);
        assert_eq!(sub.ncols(), 3);
        assert_eq!(sub.nnz(), 0);
    }

    #[test]
    fn submatrix_rejects_repeats_and_out_of_range() {
        let id = SparseSymMatrix::identity(3);
        assert!(matches!(id.submatrix(&[0, 0], &[1]), Err(Error::Index(_))));
        assert!(matches!(id.submatrix(&[5], &[0]), Err(Error::Index(_))));
    }

    #[test]
    fn submatrix_respects_given_order() {
        let m = SparseSymMatrix::from_triplets(
            3,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 5.0), (2, 0, 5.0)],
            true,
        )
        .unwrap();
        let sub = m.submatrix(&[2, 0], &[2, 0]).unwrap();
        assert_eq!(sub.get(0, 0), 3.0);
        assert_eq!(sub.get(1, 1), 1.0);
        assert_eq!(sub.get(0, 1), 5.0);
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0)], true).unwrap();
        let b = SparseSymMatrix::from_triplets(2, vec![(1, 1, 4.0)], true).unwrap();
        let c = SparseSymMatrix::add_scaled(0.5, &a, 2.0, &b).unwrap();
        assert_eq!(c.get(0, 0), 0.5);
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 1), 8.0);
    }

    #[test]
    fn matrix_market_output() {
        let m = SparseSymMatrix::from_triplets(2, vec![(0, 0, 4.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 3.0)], true).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
        assert!(text.contains("2 2 3"));
    }
}
