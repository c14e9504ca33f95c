use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds the matrix from `(row, col, value)` triplets. Duplicates are
    /// summed in input order, so the result is independent of thread count
    /// as long as the triplet order is.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(Error::OutOfRange { index: i.max(j), len: nrows.max(ncols) });
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut s = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    /// `selfᵀ x`.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for (i, j, v) in self.iter() {
            indices[next[j]] = i;
            values[next[j]] = v;
            next[j] += 1;
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr, indices, values }
    }

    /// The block of rows `rows` and columns `cols`, reindexed from zero.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if cols.contains(&j) {
                    indices.push(j - cols.start);
                    values.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows: rows.len(), ncols: cols.len(), indptr, indices, values }
    }

    pub fn scale(&mut self, s: T) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// Coordinate text, one `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.iter() {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
        s
    }

    pub fn write_coordinate(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sparse `L D Lᵀ` factorization of a symmetric matrix under a fill-reducing
/// ordering. No pivoting: intended for definite matrices.
#[derive(Debug, Clone)]
pub struct SparseLdl<T> {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
}

const NONE: usize = usize::MAX;

impl<T: Scalar> SparseLdl<T> {
    /// Factors the symmetric matrix `a` (both triangles stored).
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument(format!("LDLᵀ needs a square matrix, got {}×{}", n, a.ncols())));
        }
        let perm = amd_order(a)?;
        let mut pinv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }

        // Upper triangle of P A Pᵀ by columns (symmetric, so rows of A work).
        let mut cp = vec![0usize; n + 1];
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                let (pi, pj) = (pinv[i], pinv[j]);
                if pi <= pj {
                    cp[pj + 1] += 1;
                }
            }
        }
        for k in 0..n {
            cp[k + 1] += cp[k];
        }
        let mut next = cp.clone();
        let mut ci = vec![0; cp[n]];
        let mut cx = vec![T::zero(); cp[n]];
        for (i, j, v) in a.iter() {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                ci[next[pj]] = pi;
                cx[next[pj]] = v;
                next[pj] += 1;
            }
        }

        // Elimination tree and column counts.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &row in &ci[cp[k]..cp[k + 1]] {
                let mut i = row;
                while i < k && flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        let scale = (0..n).map(|k| a.get(k, k).abs()).fold(T::zero(), T::max);
        let tiny = T::epsilon() * scale;
        let mut li = vec![0; lp[n]];
        let mut lx = vec![T::zero(); lp[n]];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in cp[k]..cp[k + 1] {
                let mut i = ci[p];
                y[i] += cx[p];
                let mut len = 0;
                while i < k && flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = T::zero();
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let end = lp[i] + lnz[i];
                for p in lp[i]..end {
                    let r = li[p];
                    y[r] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                li[end] = k;
                lx[end] = lki;
                lnz[i] += 1;
            }
            if !(d[k].abs() > tiny) {
                return Err(Error::Breakdown { pivot: perm[k], value: d[k].to_f64_lossy() });
            }
        }
        Ok(Self { n, perm, lp, li, lx, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries of `L`.
    pub fn factor_nnz(&self) -> usize {
        self.li.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for j in 0..self.n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for (xj, &dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![T::zero(); self.n];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < T::zero()).count()
    }
}

fn amd_order<T: Scalar>(a: &CsrMatrix<T>) -> Result<Vec<usize>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ap: Vec<i64> = a.indptr().iter().map(|&v| v as i64).collect();
    let ai: Vec<i64> = a.indices().iter().map(|&v| v as i64).collect();
    let (p, _, _) = amd::order::<i64>(n as i64, &ap, &ai, &amd::Control::default())
        .map_err(|s| Error::InvalidArgument(format!("AMD ordering failed: {s:?}")))?;
    Ok(p.into_iter().map(|v| v as usize).collect())
}

/// Euclidean norm.
pub fn norm<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}
