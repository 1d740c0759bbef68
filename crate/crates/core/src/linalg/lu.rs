//! Left-looking sparse LU with threshold partial pivoting.
//!
//! The matrix is scaled symmetrically to unit diagonal magnitude, so that
//! unknowns of different physical scale (values and derivatives of Hermite
//! elements) compete fairly in the pivot search. It is then permuted symmetrically by a caller-supplied ordering
//! (typically nested dissection from the mesh). Columns are then factored
//! one at a time by a sparse triangular solve against the columns of `L`
//! computed so far, followed by a pivot search. The diagonal entry is kept
//! as pivot whenever it is within a factor [`PIVOT_THRESHOLD`] of the largest
//! candidate, which preserves the fill pattern of the symmetric ordering.

use super::scalar::Scalar;
use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Diagonal preference factor of the pivot search.
pub const PIVOT_THRESHOLD: f64 = 0.1;
/// A pivot smaller than this times the largest entry of its original column
/// is treated as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-14;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    /// Symmetric diagonal scaling `d`; the factored matrix is `D M D`.
    scale: Vec<f64>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<T>,
    u_diag_inv: Vec<T>,
}

/// Factors a square matrix. `ordering[k]` is the original index placed at
/// position `k`; `None` keeps the natural order.
pub fn sparse_lu<T: Scalar>(m: &CsrMatrix<T>, ordering: Option<&[usize]>) -> Result<SparseLu<T>> {
    SparseLu::factor(m, ordering)
}

impl<T: Scalar> SparseLu<T> {
    pub fn factor(m: &CsrMatrix<T>, ordering: Option<&[usize]>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: m.ncols(),
            });
        }
        let perm: Vec<usize> = match ordering {
            Some(p) => {
                if p.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: p.len(),
                    });
                }
                p.to_vec()
            }
            None => (0..n).collect(),
        };
        let mut iperm = vec![NONE; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        assert!(iperm.iter().all(|&k| k != NONE), "ordering is not a permutation");

        // columns of the original matrix are rows of its transpose
        let cols = m.transpose();
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let (idx, vals) = m.row(i);
                let diag = idx.iter().position(|&j| j == i).map_or(0.0, |p| vals[p].abs());
                let d = if diag > 0.0 { diag } else { vals.iter().map(|v| v.abs()).fold(0.0, f64::max) };
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();

        let mut pinv = vec![NONE; n];
        let mut l_ptr = vec![0];
        let mut l_idx: Vec<usize> = Vec::new();
        let mut l_val: Vec<T> = Vec::new();
        let mut u_ptr = vec![0];
        let mut u_idx: Vec<usize> = Vec::new();
        let mut u_val: Vec<T> = Vec::new();
        let mut u_diag = Vec::with_capacity(n);

        let mut x = vec![T::zero(); n];
        let mut stamp = vec![NONE; n];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            let col = perm[k];
            let (rows, vals) = cols.row(col);
            let scaled = |r: usize, v: T| v * T::from(scale[r] * scale[col]);
            let colmax = rows.iter().zip(vals).map(|(&r, &v)| scaled(r, v).abs()).fold(0.0, f64::max);

            // symbolic: rows reachable from the column pattern through L
            reach.clear();
            for &r0 in rows {
                let r0 = iperm[r0];
                if stamp[r0] == k {
                    continue;
                }
                stamp[r0] = k;
                stack.push((r0, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (r, mut pos) = stack[top];
                    let j = pinv[r];
                    let mut pushed = false;
                    if j != NONE {
                        let end = l_ptr[j + 1];
                        while l_ptr[j] + pos < end {
                            let child = l_idx[l_ptr[j] + pos];
                            pos += 1;
                            if stamp[child] != k {
                                stamp[child] = k;
                                stack[top].1 = pos;
                                stack.push((child, 0));
                                pushed = true;
                                break;
                            }
                        }
                    }
                    if !pushed {
                        stack.pop();
                        reach.push(r);
                    }
                }
            }

            // numeric: sparse triangular solve in topological order
            for &r in &reach {
                x[r] = T::zero();
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[iperm[r]] = scaled(r, v);
            }
            for &r in reach.iter().rev() {
                let j = pinv[r];
                if j == NONE {
                    continue;
                }
                let ujk = x[r];
                if ujk == T::zero() {
                    continue;
                }
                for p in l_ptr[j]..l_ptr[j + 1] {
                    let i = l_idx[p];
                    let lv = l_val[p];
                    x[i] -= lv * ujk;
                }
            }

            // pivot search over rows not yet pivotal
            let mut best = NONE;
            let mut best_abs = -1.0;
            for &r in &reach {
                if pinv[r] == NONE {
                    let a = x[r].abs();
                    if a > best_abs || (a == best_abs && r < best) {
                        best_abs = a;
                        best = r;
                    }
                }
            }
            if best == NONE || best_abs <= SINGULAR_TOLERANCE * colmax || best_abs == 0.0 {
                return Err(Error::Singular { pivot: k });
            }
            let piv = if stamp[k] == k && pinv[k] == NONE && x[k].abs() >= PIVOT_THRESHOLD * best_abs {
                k
            } else {
                best
            };
            let pivot = x[piv];
            pinv[piv] = k;
            u_diag.push(pivot);

            // reach is in post-order; keep storage order deterministic
            for &r in reach.iter().rev() {
                let v = x[r];
                if r == piv || v == T::zero() {
                    continue;
                }
                let j = pinv[r];
                if j != NONE && j < k {
                    u_idx.push(j);
                    u_val.push(v);
                } else if j == NONE {
                    l_idx.push(r);
                    l_val.push(v / pivot);
                }
            }
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
        }

        for i in l_idx.iter_mut() {
            *i = pinv[*i];
        }

        Ok(SparseLu {
            n,
            perm,
            pinv,
            scale,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            u_diag_inv: u_diag.into_iter().map(|d| T::one() / d).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U` (diagonal included once).
    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.n
    }

    /// Solves `M x = b`. A real factor applied to a complex right-hand side
    /// acts on the real and imaginary parts independently.
    pub fn solve<S: Scalar + From<T>>(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut c = vec![S::zero(); n];
        for k in 0..n {
            let i = self.perm[k];
            c[self.pinv[k]] = b[i] * S::from(self.scale[i]);
        }
        for j in 0..n {
            let cj = c[j];
            if cj == S::zero() {
                continue;
            }
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                c[self.l_idx[p]] -= S::from(self.l_val[p]) * cj;
            }
        }
        for k in (0..n).rev() {
            c[k] *= S::from(self.u_diag_inv[k]);
            let ck = c[k];
            if ck == S::zero() {
                continue;
            }
            for p in self.u_ptr[k]..self.u_ptr[k + 1] {
                c[self.u_idx[p]] -= S::from(self.u_val[p]) * ck;
            }
        }
        let mut x = vec![S::zero(); n];
        for k in 0..n {
            let i = self.perm[k];
            x[i] = c[k] * S::from(self.scale[i]);
        }
        x
    }

    /// Solves `M^T x = b`, or `M^H x = b` when `conjugate` is set.
    pub fn solve_transposed<S: Scalar + From<T>>(&self, b: &[S], conjugate: bool) -> Vec<S> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let cj = |v: T| if conjugate { v.conj() } else { v };
        let mut z = vec![S::zero(); n];
        for k in 0..n {
            let i = self.perm[k];
            z[k] = b[i] * S::from(self.scale[i]);
        }
        for k in 0..n {
            let mut acc = z[k];
            for p in self.u_ptr[k]..self.u_ptr[k + 1] {
                acc -= S::from(cj(self.u_val[p])) * z[self.u_idx[p]];
            }
            z[k] = acc * S::from(cj(self.u_diag_inv[k]));
        }
        for j in (0..n).rev() {
            let mut acc = z[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                acc -= S::from(cj(self.l_val[p])) * z[self.l_idx[p]];
            }
            z[j] = acc;
        }
        let mut x = vec![S::zero(); n];
        for i in 0..n {
            let p = self.perm[i];
            x[p] = z[self.pinv[i]] * S::from(self.scale[p]);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(m: &CsrMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        let r = m.mul_vec(x);
        let num: f64 = r.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = b.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    }

    #[test]
    fn identity_solve() {
        let lu = sparse_lu(&CsrMatrix::<f64>::identity(5), None).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(lu.solve(&b), b.to_vec());
    }

    #[test]
    fn permutation_needs_pivoting() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let lu = sparse_lu(&m, None).unwrap();
        assert_eq!(lu.solve(&[3.0, 4.0]), vec![4.0, 3.0]);
        assert_eq!(lu.solve_transposed(&[3.0, 4.0], false), vec![4.0, 3.0]);
    }

    #[test]
    fn singular_reports_pivot() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 1, 1.0)]);
        match sparse_lu(&m, None) {
            Err(Error::Singular { pivot }) => assert_eq!(pivot, 2),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    fn random_sparse(n: usize, density: f64, seed: u64) -> CsrMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < density {
                    trip.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
            // keeps the matrix structurally nonsingular without making it diagonally dominant
            trip.push((i, (i * 7 + 3) % n, rng.gen_range(0.5..1.0)));
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn random_sparse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let m = random_sparse(50, 0.1, seed);
            let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let order: Vec<usize> = (0..50).rev().collect();
            for ordering in [None, Some(order.as_slice())] {
                let lu = sparse_lu(&m, ordering).unwrap();
                assert!(residual(&m, &lu.solve(&b), &b) <= 1e-10);
                let xt = lu.solve_transposed(&b, false);
                assert!(residual(&m.transpose(), &xt, &b) <= 1e-10);
            }
        }
    }

    #[test]
    fn complex_rhs_with_real_factor_splits() {
        let m = random_sparse(30, 0.15, 42);
        let lu = sparse_lu(&m, None).unwrap();
        let re: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let im: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let b: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect();
        let x = lu.solve(&b);
        let xr = lu.solve(&re);
        let xi = lu.solve(&im);
        for k in 0..30 {
            assert_eq!(x[k].re, xr[k]);
            assert_eq!(x[k].im, xi[k]);
        }
        assert!(lu.solve(&vec![C64::new(0.0, 0.0); 30]).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn complex_matrix_adjoint_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < 0.12 || i == j {
                    trip.push((i, j, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
        }
        let m = CsrMatrix::from_triplets(n, n, trip);
        let lu = sparse_lu(&m, None).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = lu.solve_transposed(&b, true);
        let r = m.tr_mul_vec(&x, true);
        let err: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / nb < 1e-10);
        let x = lu.solve(&b);
        let r = m.mul_vec(&x);
        let err: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / nb < 1e-10);
    }

    #[test]
    fn consistency_with_unit_vector() {
        let m = random_sparse(20, 0.2, 9);
        let lu = sparse_lu(&m, None).unwrap();
        let mut e1 = vec![0.0; 20];
        e1[0] = 1.0;
        let b = m.mul_vec(&e1);
        let x = lu.solve(&b);
        for (k, v) in x.iter().enumerate() {
            assert!((v - e1[k]).abs() < 1e-10);
        }
    }
}
