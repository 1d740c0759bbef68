//! Small dense complex kernels: Cholesky, LU, Hessenberg reduction, the
//! complex Schur form by shifted QR, Schur reordering and triangular
//! eigenvectors.

use std::ops::{Index, IndexMut};

use super::scalar::{c64, C64};
use crate::{Error, Result};

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i + j * self.nrows]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i + j * self.nrows]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![C64::default(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c64(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(nrows: usize, cols: &[Vec<C64>]) -> Self {
        let mut data = Vec::with_capacity(nrows * cols.len());
        for c in cols {
            assert_eq!(c.len(), nrows);
            data.extend_from_slice(c);
        }
        DenseMatrix {
            nrows,
            ncols: cols.len(),
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            for k in 0..self.ncols {
                let b = other[(k, j)];
                if b == C64::default() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::default(); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// `A^H x`
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).iter().zip(x).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }

    /// Leading `r x c` block.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows.start + i, cols.start + j)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = c64(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &mut [C64]) {
    let n = l.nrows();
    for j in 0..n {
        b[j] /= l[(j, j)];
        let bj = b[j];
        let col = l.col(j);
        for i in j + 1..n {
            b[i] -= col[i] * bj;
        }
    }
}

/// Solves `L^H x = b` in place for lower triangular `L`.
pub fn solve_lower_adjoint(l: &DenseMatrix, b: &mut [C64]) {
    let n = l.nrows();
    for j in (0..n).rev() {
        let col = l.col(j);
        let mut s = b[j];
        for i in j + 1..n {
            s -= col[i].conj() * b[i];
        }
        b[j] = s / col[j].conj();
    }
}

/// Dense LU with partial pivoting. Exactly zero pivots are replaced by a
/// tiny multiple of the matrix norm when `perturb` is set, which is what
/// inverse iteration at a computed eigenvalue wants.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix, perturb: bool) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (mut p, mut best) = (k, 0.0);
            for i in k..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                if !perturb {
                    return Err(Error::Singular { pivot: k });
                }
                lu[(p, k)] = c64(tiny, 0.0);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
            }
            let inv = 1.0 / lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == C64::default() {
                    continue;
                }
                for i in k + 1..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(DenseLu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// `x = A^{-1} b`
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            for i in j + 1..n {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            for i in 0..j {
                x[i] -= self.lu[(i, j)] * xj;
            }
        }
        x
    }

    /// `x = A^{-H} b`
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = b.to_vec();
        // U^H z = b
        for j in 0..n {
            let mut s = y[j];
            for i in 0..j {
                s -= self.lu[(i, j)].conj() * y[i];
            }
            y[j] = s / self.lu[(j, j)].conj();
        }
        // L^H t = z
        for j in (0..n).rev() {
            let mut s = y[j];
            for i in j + 1..n {
                s -= self.lu[(i, j)].conj() * y[i];
            }
            y[j] = s;
        }
        let mut x = vec![C64::default(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Reduces `a` to upper Hessenberg form by Householder reflections,
/// accumulating them into `q` when given (`a_in = q a_out q^H`).
pub fn hessenberg(a: &mut DenseMatrix, mut q: Option<&mut DenseMatrix>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { c64(1.0, 0.0) };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vnorm);
        // rows: a = (I - 2vv^H) a on columns k..n
        for j in k..n {
            let s: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * a[(k + 1 + t, j)]).sum();
            let s = s * 2.0;
            for (t, vi) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vi * s;
            }
        }
        // columns: a = a (I - 2vv^H)
        for i in 0..n {
            let s: C64 = v.iter().enumerate().map(|(t, vi)| a[(i, k + 1 + t)] * vi).sum();
            let s = s * 2.0;
            for (t, vi) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= s * vi.conj();
            }
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..q.nrows() {
                let s: C64 = v.iter().enumerate().map(|(t, vi)| q[(i, k + 1 + t)] * vi).sum();
                let s = s * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    q[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C64::default();
        }
    }
}

/// Plane rotation `[[c, s], [-conj(s), c]]` with `c` real, zeroing `y`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    fn new(x: C64, y: C64) -> Self {
        let ax = x.norm();
        let ay = y.norm();
        if ay == 0.0 {
            return Givens { c: 1.0, s: C64::default() };
        }
        if ax == 0.0 {
            return Givens { c: 0.0, s: y.conj() / ay };
        }
        let r = ax.hypot(ay);
        let phase = x / ax;
        Givens {
            c: ax / r,
            s: phase * y.conj() / r,
        }
    }

    /// Left application to rows `k, k+1` over the column range.
    fn rows(&self, m: &mut DenseMatrix, k: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let a = m[(k, j)];
            let b = m[(k + 1, j)];
            m[(k, j)] = a * self.c + self.s * b;
            m[(k + 1, j)] = -self.s.conj() * a + b * self.c;
        }
    }

    /// Right application of the adjoint to columns `k, k+1` over the row range.
    fn cols(&self, m: &mut DenseMatrix, k: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let a = m[(i, k)];
            let b = m[(i, k + 1)];
            m[(i, k)] = a * self.c + b * self.s.conj();
            m[(i, k + 1)] = -a * self.s + b * self.c;
        }
    }
}

fn l1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces an upper Hessenberg matrix to upper triangular Schur form by
/// single-shift complex QR. When `z` is given the whole triangle is kept
/// up to date and the rotations are accumulated (`h_in = z t z^H`);
/// without it only the diagonal is meaningful on return.
pub fn schur_from_hessenberg(h: &mut DenseMatrix, mut z: Option<&mut DenseMatrix>) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let full = z.is_some();
    let eps = f64::EPSILON;
    let norm = h.max_abs().max(f64::MIN_POSITIVE);
    let max_iter = 30 * n.max(10);
    let mut ihi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    while ihi > 0 {
        // locate the active block
        let mut l = ihi;
        while l > 0 {
            let sub = l1(h[(l, l - 1)]);
            let mut tst = l1(h[(l - 1, l - 1)]) + l1(h[(l, l)]);
            if tst == 0.0 {
                tst = norm;
            }
            if sub <= eps * tst {
                h[(l, l - 1)] = C64::default();
                break;
            }
            l -= 1;
        }
        if l == ihi {
            ihi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::QrFailure);
        }
        let d = h[(ihi, ihi)];
        let mu = if its % 10 == 0 {
            d + c64(0.75 * l1(h[(ihi, ihi - 1)]), 0.0)
        } else {
            let a = h[(ihi - 1, ihi - 1)];
            let b = h[(ihi - 1, ihi)];
            let c = h[(ihi, ihi - 1)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = d + half + disc;
            let m2 = d + half - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };
        let col_end = if full { n } else { ihi + 1 };
        let row_start = if full { 0 } else { l };
        for k in l..ihi {
            let g = if k == l {
                Givens::new(h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                Givens::new(h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let c0 = if k == l { l } else { k - 1 };
            g.rows(h, k, c0..col_end);
            let r_end = (k + 3).min(ihi + 1);
            g.cols(h, k, row_start..r_end);
            if let Some(z) = z.as_deref_mut() {
                let nz = z.nrows();
                g.cols(z, k, 0..nz);
            }
            if k > l {
                h[(k + 1, k - 1)] = C64::default();
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::default();
        }
    }
    Ok(())
}

/// Complex Schur decomposition `a = z t z^H`.
pub fn schur(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let mut t = a.clone();
    let mut z = DenseMatrix::identity(a.nrows());
    hessenberg(&mut t, Some(&mut z));
    schur_from_hessenberg(&mut t, Some(&mut z))?;
    Ok((t, z))
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>> {
    let mut t = a.clone();
    hessenberg(&mut t, None);
    schur_from_hessenberg(&mut t, None)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Swaps the adjacent diagonal entries `k` and `k+1` of an upper
/// triangular Schur factor, updating the Schur vectors.
pub fn swap_schur(t: &mut DenseMatrix, z: &mut DenseMatrix, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    // eigenvector of the 2x2 block for b is (t12, b - a)
    let g = Givens::new(t[(k, k + 1)], b - a);
    // G maps that eigenvector to a multiple of e1, so G t G^H swaps the pair
    g.rows(t, k, k..n);
    g.cols(t, k, 0..(k + 2));
    let nz = z.nrows();
    g.cols(z, k, 0..nz);
    t[(k + 1, k)] = C64::default();
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Moves the diagonal entries at the positions in `select` (in that order)
/// to the leading positions of the Schur form.
pub fn reorder_schur(t: &mut DenseMatrix, z: &mut DenseMatrix, select: &[usize]) {
    let n = t.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    for (target, &want) in select.iter().enumerate() {
        let mut pos = order.iter().position(|&o| o == want).expect("selected index out of range");
        while pos > target {
            swap_schur(t, z, pos - 1);
            order.swap(pos - 1, pos);
            pos -= 1;
        }
    }
}

/// Right eigenvector of an upper triangular matrix for its `i`-th diagonal
/// entry. Components coupling to a numerically equal diagonal entry are set
/// to zero, which picks an independent vector within a semisimple cluster.
pub fn triangular_right_eigvec(t: &DenseMatrix, i: usize, cluster_tol: f64) -> Vec<C64> {
    let n = t.nrows();
    let lam = t[(i, i)];
    let small = f64::EPSILON * t.max_abs().max(f64::MIN_POSITIVE);
    let mut y = vec![C64::default(); n];
    y[i] = c64(1.0, 0.0);
    for k in (0..i).rev() {
        let s: C64 = (k + 1..=i).map(|l| t[(k, l)] * y[l]).sum();
        let den = lam - t[(k, k)];
        if den.norm() <= cluster_tol * lam.norm().max(t[(k, k)].norm()) {
            y[k] = C64::default();
        } else {
            let den = if den.norm() < small { c64(small, 0.0) } else { den };
            y[k] = s / den;
        }
    }
    y
}

/// Left eigenvector `y^H t = t_ii y^H` of an upper triangular matrix.
pub fn triangular_left_eigvec(t: &DenseMatrix, i: usize, cluster_tol: f64) -> Vec<C64> {
    let n = t.nrows();
    let lam = t[(i, i)];
    let small = f64::EPSILON * t.max_abs().max(f64::MIN_POSITIVE);
    let mut y = vec![C64::default(); n];
    y[i] = c64(1.0, 0.0);
    for k in i + 1..n {
        let s: C64 = (i..k).map(|l| t[(l, k)].conj() * y[l]).sum();
        let den = (lam - t[(k, k)]).conj();
        if den.norm() <= cluster_tol * lam.norm().max(t[(k, k)].norm()) {
            y[k] = C64::default();
        } else {
            let den = if den.norm() < small { c64(small, 0.0) } else { den };
            y[k] = s / den;
        }
    }
    y
}
