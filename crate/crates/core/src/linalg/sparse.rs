use super::scalar::{Scalar, C64};

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![T::one(); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        Self::from_rows(ncols, rows)
    }

    fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let start = indices.len();
            for (j, v) in row {
                if indices.len() > start && *indices.last().unwrap() == j {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`
    pub fn mul_vec<S: Scalar + From<T>>(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into<S: Scalar + From<T>>(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = S::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += S::from(v) * x[j];
            }
            *yi = acc;
        }
    }

    /// `y = A^T x`, or `A^H x` when `conjugate` is set.
    pub fn tr_mul_vec<S: Scalar + From<T>>(&self, x: &[S], conjugate: bool) -> Vec<S> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![S::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let v = if conjugate { v.conj() } else { v };
                y[j] += S::from(v) * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![T::zero(); self.nnz()];
        for (i, j, v) in self.triplets() {
            let p = next[j];
            indices[p] = i;
            data[p] = v;
            next[j] += 1;
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix<T>) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![T::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = T::zero();
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// `alpha * self + beta * other`, same shape.
    pub fn linear_combination(&self, alpha: T, other: &CsrMatrix<T>, beta: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|i| {
                let (ca, va) = self.row(i);
                let (cb, vb) = other.row(i);
                let mut row: Vec<(usize, T)> = ca.iter().zip(va).map(|(&j, &v)| (j, alpha * v)).collect();
                row.extend(cb.iter().zip(vb).map(|(&j, &v)| (j, beta * v)));
                row
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = alpha * *v);
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    pub fn to_complex(&self) -> CsrMatrix<C64> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self.data.iter().map(|v| v.to_complex()).collect(),
        }
    }

    /// Assembles `[[a, b], [c, d]]` from optional blocks.
    pub fn block_2x2(blocks: [[Option<&CsrMatrix<T>>; 2]; 2], sizes: ([usize; 2], [usize; 2])) -> Self {
        let (rs, cs) = sizes;
        let mut trip = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    assert_eq!((m.nrows, m.ncols), (rs[bi], cs[bj]), "block shape");
                    let (ro, co) = (bi * rs[0], bj * cs[0]);
                    trip.extend(m.triplets().map(|(i, j, v)| (i + ro, j + co, v)));
                }
            }
        }
        Self::from_triplets(rs[0] + rs[1], cs[0] + cs[1], trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix<f64> {
        CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 2.0), (0, 2, 1.0), (1, 1, 3.0), (2, 0, -1.0), (2, 2, 4.0), (0, 0, 1.0)],
        )
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 5);
    }

    #[test]
    fn products_agree_with_dense() {
        let a = sample();
        let x = [1.0, 2.0, 3.0];
        assert_eq!(a.mul_vec(&x), vec![6.0, 6.0, 11.0]);
        assert_eq!(a.tr_mul_vec(&x, false), vec![0.0, 6.0, 13.0]);
        assert_eq!(a.transpose().mul_vec(&x), a.tr_mul_vec(&x, false));
        let a2 = a.matmul(&a);
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = (0..3).map(|k| d[i][k] * d[k][j]).sum();
                assert_eq!(a2.get(i, j), e);
            }
        }
    }

    #[test]
    fn complex_vector_with_real_matrix() {
        let a = sample();
        let x = vec![C64::new(1.0, 1.0); 3];
        let y = a.mul_vec(&x);
        assert_eq!(y[0], C64::new(4.0, 4.0));
    }

    #[test]
    fn block_assembly() {
        let i = CsrMatrix::<f64>::identity(2);
        let b = CsrMatrix::block_2x2([[Some(&i), None], [Some(&i), Some(&i)]], ([2, 2], [2, 2]));
        assert_eq!(b.nnz(), 6);
        assert_eq!(b.get(2, 0), 1.0);
        assert_eq!(b.get(0, 2), 0.0);
    }
}
