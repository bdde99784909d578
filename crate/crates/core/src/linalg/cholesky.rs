//! Preordered Cholesky factorization UᵀU = PᵀMP and triangular solves.
//!
//! Sparse systems go through an up-looking factorization driven by the
//! elimination tree of the permuted matrix. Small systems (n < 64) fall back
//! to a dense factorization with the natural order, which keeps hand-checked
//! oracles trivial.

use crate::error::{Error, Result};
use crate::linalg::{min_degree_order, SparseSymMatrix};

const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    /// Greedy minimum-degree, fill-reducing.
    #[default]
    MinDegree,
    /// Keep the input order (debugging aid; the solution is the same).
    Natural,
}

#[derive(Debug, Clone)]
enum FactorKind {
    /// Row-major dense upper factor.
    Dense { u: Vec<f64> },
    /// Columns of the lower factor L = Uᵀ in compressed form, diagonal entry
    /// first in each column, rows ascending after it.
    Sparse {
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// Upper-triangular factor with its fill-reducing permutation:
/// UᵀU = PᵀMP where (Pᵀr)[i] = r[perm[i]].
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    kind: FactorKind,
}

/// Factorize an SPD matrix with the default ordering.
pub fn factorize(m: &SparseSymMatrix) -> Result<CholeskyFactor> {
    factorize_with(m, Ordering::MinDegree)
}

pub fn factorize_with(m: &SparseSymMatrix, ordering: Ordering) -> Result<CholeskyFactor> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "cannot factorize a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(CholeskyFactor {
            n,
            perm: Vec::new(),
            kind: FactorKind::Sparse {
                col_ptr: vec![0],
                row_idx: Vec::new(),
                vals: Vec::new(),
            },
        });
    }
    if n < DENSE_LIMIT {
        return factorize_dense(m);
    }
    let perm = match ordering {
        Ordering::MinDegree => min_degree_order(m),
        Ordering::Natural => (0..n).collect(),
    };
    factorize_sparse(m, perm)
}

fn factorize_dense(m: &SparseSymMatrix) -> Result<CholeskyFactor> {
    let n = m.dim();
    let a = m.to_dense();
    let mut u = vec![0.0; n * n];
    for k in 0..n {
        let mut d = a[k * n + k];
        for i in 0..k {
            d -= u[i * n + k] * u[i * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: k, pivot: d });
        }
        let dk = d.sqrt();
        u[k * n + k] = dk;
        for j in (k + 1)..n {
            let mut s = a[k * n + j];
            for i in 0..k {
                s -= u[i * n + k] * u[i * n + j];
            }
            u[k * n + j] = s / dk;
        }
    }
    Ok(CholeskyFactor {
        n,
        perm: (0..n).collect(),
        kind: FactorKind::Dense { u },
    })
}

/// Upper-triangular part of PᵀMP in compressed-column form.
fn permuted_upper_csc(m: &SparseSymMatrix, perm: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = m.dim();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut counts = vec![0usize; n + 1];
    for old_i in 0..n {
        let (cols, _) = m.row(old_i);
        let pi = inv[old_i];
        for &old_j in cols {
            let pj = inv[old_j];
            let col = pi.max(pj);
            // Keep each entry once: rows of M cover (i,j) and (j,i); take the
            // one that lands in the upper triangle by permuted index.
            if pi <= pj {
                counts[col + 1] += 1;
            }
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let nnz = counts[n];
    let mut col_ptr = counts.clone();
    let mut row_idx = vec![0usize; nnz];
    let mut vals = vec![0.0; nnz];
    for old_i in 0..n {
        let (cols, v) = m.row(old_i);
        let pi = inv[old_i];
        for (&old_j, &val) in cols.iter().zip(v) {
            let pj = inv[old_j];
            if pi <= pj {
                let slot = col_ptr[pj];
                col_ptr[pj] += 1;
                row_idx[slot] = pi;
                vals[slot] = val;
            }
        }
    }
    // The fill loop advanced col_ptr[j] to one past the end of column j.
    let mut rebuilt = vec![0usize; n + 1];
    rebuilt[1..].copy_from_slice(&col_ptr[..n]);
    (rebuilt, row_idx, vals)
}

/// Elimination tree of the upper-triangular CSC pattern.
fn etree(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for j in 0..n {
        for p in col_ptr[j]..col_ptr[j + 1] {
            let mut i = row_idx[p];
            while i != NONE && i < j {
                let next = ancestor[i];
                ancestor[i] = j;
                if next == NONE {
                    parent[i] = j;
                }
                i = next;
            }
        }
    }
    parent
}

/// Pattern of row k of L: nonzero columns reached by walking the etree up
/// from the entries of column k, in topological order. Returns the start
/// offset into `stack`, which is filled from the back.
fn ereach(
    k: usize,
    col_ptr: &[usize],
    row_idx: &[usize],
    parent: &[usize],
    stamp: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = parent.len();
    let mark = k + 1;
    stamp[k] = mark;
    let mut top = n;
    let mut path = Vec::new();
    for p in col_ptr[k]..col_ptr[k + 1] {
        let mut i = row_idx[p];
        if i > k {
            continue;
        }
        path.clear();
        while stamp[i] != mark {
            stamp[i] = mark;
            path.push(i);
            i = parent[i];
            if i == usize::MAX {
                break;
            }
        }
        for &v in path.iter().rev() {
            top -= 1;
            stack[top] = v;
        }
    }
    top
}

fn factorize_sparse(m: &SparseSymMatrix, perm: Vec<usize>) -> Result<CholeskyFactor> {
    let n = m.dim();
    let (b_ptr, b_idx, b_vals) = permuted_upper_csc(m, &perm);
    let parent = etree(n, &b_ptr, &b_idx);

    // Symbolic pass: column counts of L.
    let mut stamp = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut counts = vec![1usize; n]; // diagonal
    for k in 0..n {
        let top = ereach(k, &b_ptr, &b_idx, &parent, &mut stamp, &mut stack);
        for &i in &stack[top..n] {
            counts[i] += 1;
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    for i in 0..n {
        col_ptr[i + 1] = col_ptr[i] + counts[i];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut vals = vec![0.0; nnz];
    let mut next = col_ptr[..n].to_vec();

    // Numeric up-looking pass.
    let mut stamp = vec![0usize; n];
    let mut x = vec![0.0; n];
    for k in 0..n {
        let top = ereach(k, &b_ptr, &b_idx, &parent, &mut stamp, &mut stack);
        let mut d = 0.0;
        for p in b_ptr[k]..b_ptr[k + 1] {
            let i = b_idx[p];
            if i < k {
                x[i] = b_vals[p];
            } else if i == k {
                d = b_vals[p];
            }
        }
        for s in top..n {
            let i = stack[s];
            let lki = x[i] / vals[col_ptr[i]];
            x[i] = 0.0;
            for p in (col_ptr[i] + 1)..next[i] {
                x[row_idx[p]] -= vals[p] * lki;
            }
            d -= lki * lki;
            row_idx[next[i]] = k;
            vals[next[i]] = lki;
            next[i] += 1;
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: k, pivot: d });
        }
        row_idx[next[k]] = k;
        vals[next[k]] = d.sqrt();
        next[k] += 1;
    }

    Ok(CholeskyFactor {
        n,
        perm,
        kind: FactorKind::Sparse {
            col_ptr,
            row_idx,
            vals,
        },
    })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fill-reducing permutation, `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Reconstruct U as a dense row-major matrix (testing aid).
    pub fn dense_u(&self) -> Vec<f64> {
        let n = self.n;
        let mut u = vec![0.0; n * n];
        match &self.kind {
            FactorKind::Dense { u: d } => u.copy_from_slice(d),
            FactorKind::Sparse {
                col_ptr,
                row_idx,
                vals,
            } => {
                for j in 0..n {
                    for p in col_ptr[j]..col_ptr[j + 1] {
                        // Column j of L is row j of U.
                        u[j * n + row_idx[p]] = vals[p];
                    }
                }
            }
        }
        u
    }

    /// Solve M x = r in place: Uᵀy = Pᵀr, Uz = y, x = Pz.
    pub fn solve_in_place(&self, r: &mut [f64]) -> Result<()> {
        if r.len() != self.n {
            return Err(Error::Shape(format!(
                "rhs length {} does not match dimension {}",
                r.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[i] = r[self.perm[i]];
        }
        match &self.kind {
            FactorKind::Dense { u } => {
                for i in 0..n {
                    let mut s = z[i];
                    for k in 0..i {
                        s -= u[k * n + i] * z[k];
                    }
                    z[i] = s / u[i * n + i];
                }
                for i in (0..n).rev() {
                    let mut s = z[i];
                    for k in (i + 1)..n {
                        s -= u[i * n + k] * z[k];
                    }
                    z[i] = s / u[i * n + i];
                }
            }
            FactorKind::Sparse {
                col_ptr,
                row_idx,
                vals,
            } => {
                // Forward: L y = Pᵀr, columns of L left to right.
                for j in 0..n {
                    z[j] /= vals[col_ptr[j]];
                    for p in (col_ptr[j] + 1)..col_ptr[j + 1] {
                        z[row_idx[p]] -= vals[p] * z[j];
                    }
                }
                // Backward: Lᵀ z = y.
                for j in (0..n).rev() {
                    let mut s = z[j];
                    for p in (col_ptr[j] + 1)..col_ptr[j + 1] {
                        s -= vals[p] * z[row_idx[p]];
                    }
                    z[j] = s / vals[col_ptr[j]];
                }
            }
        }
        for i in 0..n {
            r[self.perm[i]] = z[i];
        }
        Ok(())
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut x = r.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Solve against several right-hand sides, column by column.
    pub fn solve_multi(&self, columns: &mut [Vec<f64>]) -> Result<()> {
        for c in columns {
            self.solve_in_place(c)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob(a: &[f64]) -> f64 {
        a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// UᵀU compared against PᵀMP, relative Frobenius.
    fn factor_residual(m: &SparseSymMatrix, f: &CholeskyFactor) -> f64 {
        let n = m.dim();
        let u = f.dense_u();
        let p = f.permutation();
        let md = m.to_dense();
        let mut utu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += u[k * n + i] * u[k * n + j];
                }
                utu[i * n + j] = s;
            }
        }
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                diff[i * n + j] = utu[i * n + j] - md[p[i] * n + p[j]];
            }
        }
        frob(&diff) / frob(&md)
    }

    #[test]
    fn diagonal_factor() {
        let m = SparseSymMatrix::from_triplets(2, vec![(0, 0, 4.0), (1, 1, 9.0)], true).unwrap();
        let f = factorize(&m).unwrap();
        assert_eq!(f.permutation(), &[0, 1]);
        assert_eq!(f.dense_u(), vec![2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn hand_cholesky_2x2() {
        let m = SparseSymMatrix::from_triplets(
            2,
            vec![(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)],
            true,
        )
        .unwrap();
        let f = factorize(&m).unwrap();
        let u = f.dense_u();
        assert!((u[0] - 2.0).abs() < 1e-15);
        assert!((u[1] - 1.0).abs() < 1e-15);
        assert!((u[2]).abs() < 1e-15);
        assert!((u[3] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_rejected() {
        let m = SparseSymMatrix::from_triplets(
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
            true,
        )
        .unwrap();
        let err = factorize(&m).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }), "{err}");
    }

    #[test]
    fn identity_solve_is_identity() {
        let m = SparseSymMatrix::identity(10);
        let f = factorize(&m).unwrap();
        let r: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        assert_eq!(f.solve(&r).unwrap(), r);
    }

    /// Deterministic congruential generator, good enough for test matrices.
    fn cheap_rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        }
    }

    fn random_spd(n: usize, seed: u64) -> SparseSymMatrix {
        let mut rng = cheap_rng(seed);
        let mut t = Vec::new();
        let mut diag = vec![1.0; n];
        for i in 0..n {
            for j in (i + 1)..n {
                // Sparse band plus a few long-range couplings.
                if j - i <= 2 || (i * 31 + j * 17) % 23 == 0 {
                    let v = rng();
                    t.push((i, j, v));
                    t.push((j, i, v));
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
        }
        for (i, d) in diag.into_iter().enumerate() {
            t.push((i, i, d + 0.5));
        }
        SparseSymMatrix::from_triplets(n, t, true).unwrap()
    }

    fn dense_lu_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
        let mut m = a.to_vec();
        let mut x = b.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&r, &s| m[piv[r] * n + k].abs().total_cmp(&m[piv[s] * n + k].abs()))
                .unwrap();
            piv.swap(k, p);
            let pk = piv[k];
            for r in (k + 1)..n {
                let pr = piv[r];
                let f = m[pr * n + k] / m[pk * n + k];
                m[pr * n + k] = f;
                for c in (k + 1)..n {
                    m[pr * n + c] -= f * m[pk * n + c];
                }
            }
        }
        let mut y = vec![0.0; n];
        for k in 0..n {
            let mut s = x[piv[k]];
            for c in 0..k {
                s -= m[piv[k] * n + c] * y[c];
            }
            y[k] = s;
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for c in (k + 1)..n {
                s -= m[piv[k] * n + c] * x[c];
            }
            x[k] = s / m[piv[k] * n + k];
        }
        x
    }

    #[test]
    fn sparse_solve_matches_dense_oracle() {
        for (seed, n) in [(1u64, 50), (2, 80), (3, 120)] {
            let m = random_spd(n, seed);
            let f = factorize(&m).unwrap();
            let mut rng = cheap_rng(seed + 100);
            let b: Vec<f64> = (0..n).map(|_| rng()).collect();
            let x = f.solve(&b).unwrap();
            let oracle = dense_lu_solve(&m.to_dense(), n, &b);
            let err = x
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let scale = oracle.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!(err <= 1e-10 * scale.max(1.0), "n={n} err={err}");
        }
    }

    #[test]
    fn factor_invariant_utu_eq_ptmp() {
        for (seed, n) in [(7u64, 30), (8, 90)] {
            let m = random_spd(n, seed);
            let f = factorize(&m).unwrap();
            assert!(factor_residual(&m, &f) < 1e-10);
        }
    }

    #[test]
    fn ordering_changes_permutation_not_solution() {
        let n = 100;
        let m = random_spd(n, 42);
        let fa = factorize_with(&m, Ordering::MinDegree).unwrap();
        let fb = factorize_with(&m, Ordering::Natural).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let xa = fa.solve(&b).unwrap();
        let xb = fb.solve(&b).unwrap();
        for (a, b) in xa.iter().zip(&xb) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_roundtrip_recovers_x() {
        let n = 150;
        let m = random_spd(n, 11);
        let f = factorize(&m).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.01).cos()).collect();
        let mut b = vec![0.0; n];
        m.matvec(&x, &mut b);
        let got = f.solve(&b).unwrap();
        let err: f64 = got.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err={err}");
    }

    #[test]
    fn multi_column_solve_equals_per_column() {
        let n = 70;
        let m = random_spd(n, 5);
        let f = factorize(&m).unwrap();
        let mut rng = cheap_rng(99);
        let c1: Vec<f64> = (0..n).map(|_| rng()).collect();
        let c2: Vec<f64> = (0..n).map(|_| rng()).collect();
        let mut cols = vec![c1.clone(), c2.clone()];
        f.solve_multi(&mut cols).unwrap();
        assert_eq!(cols[0], f.solve(&c1).unwrap());
        assert_eq!(cols[1], f.solve(&c2).unwrap());
    }

    #[test]
    fn shape_error_on_bad_rhs() {
        let m = SparseSymMatrix::identity(4);
        let f = factorize(&m).unwrap();
        assert!(matches!(f.solve(&[1.0, 2.0]), Err(Error::Shape(_))));
    }
}
