//! Dense solver for small pencils `A x = lambda B x` with `A` Hermitian
//! positive definite.
//!
//! With `A = L L^H` the pencil is equivalent to the standard problem
//! `C z = nu z`, `C = L^{-1} B L^{-H}`, `nu = 1/lambda`, `x = L^{-H} z`.
//! Eigenvalues come from Hessenberg reduction and shifted QR; vectors are
//! computed on demand by inverse iteration on `C` (right) and `C^H` (left).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arnoldi::{finish_pairs, INFINITE_GUARD};
use super::dense::{cholesky, eigenvalues, solve_lower, solve_lower_adjoint, DenseLu, DenseMatrix};
use super::eigpairs::EigenPairSet;
use super::scalar::{axpy, c64, dot, norm2, C64};
use crate::Result;

const INVERSE_ITERATIONS: usize = 3;

pub struct DensePencil {
    a: DenseMatrix,
    b: DenseMatrix,
    l: DenseMatrix,
    c: DenseMatrix,
    nu: Vec<C64>,
    real: bool,
}

impl DensePencil {
    pub fn new(a: &DenseMatrix, b: &DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        let l = cholesky(a)?;
        // C = L^{-1} B L^{-H}: first W = L^{-1} B, then C^H = L^{-1} W^H
        let mut w = b.clone();
        for j in 0..n {
            solve_lower(&l, w.col_mut(j));
        }
        let mut ch = w.adjoint();
        for j in 0..n {
            solve_lower(&l, ch.col_mut(j));
        }
        let c = ch.adjoint();
        let nu = eigenvalues(&c)?;
        let real = (0..n).all(|j| a.col(j).iter().chain(b.col(j)).all(|z| z.im == 0.0));
        Ok(DensePencil {
            a: a.clone(),
            b: b.clone(),
            l,
            c,
            nu,
            real,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Finite eigenvalues `lambda = 1/nu`; eigenvalues with
    /// `|nu| <= 1e-12 max|nu|` are infinite and left out.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let scale = self.nu.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.nu
            .iter()
            .filter(|v| v.norm() > INFINITE_GUARD * scale.max(1.0))
            .map(|v| 1.0 / v)
            .collect()
    }

    /// Pairs for the given eigenvalues (taken from [`Self::eigenvalues`]).
    pub fn pairs(&self, lambdas: &[C64]) -> Result<EigenPairSet> {
        let n = self.dim();
        let mut set = EigenPairSet::default();
        // group numerically equal values so that their vectors stay independent
        let mut done = vec![false; lambdas.len()];
        for i in 0..lambdas.len() {
            if done[i] {
                continue;
            }
            let group: Vec<usize> = (i..lambdas.len())
                .filter(|&j| !done[j] && (lambdas[j] - lambdas[i]).norm() <= 1e-8 * lambdas[i].norm())
                .collect();
            let mu = 1.0 / lambdas[i];
            let mut shifted = self.c.clone();
            for k in 0..n {
                shifted[(k, k)] -= mu;
            }
            let lu = DenseLu::factor(&shifted, true)?;
            let mut zs: Vec<Vec<C64>> = Vec::new();
            let mut ws: Vec<Vec<C64>> = Vec::new();
            for (g, &j) in group.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(0xd0 + g as u64);
                let start: Vec<C64> = (0..n).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let z = iterate(&start, &zs, |v| lu.solve(v));
                let w = iterate(&start, &ws, |v| lu.solve_adjoint(v));
                zs.push(z.clone());
                ws.push(w.clone());
                let mut x = z;
                solve_lower_adjoint(&self.l, &mut x);
                let mut y = w;
                solve_lower_adjoint(&self.l, &mut y);
                set.values.push(lambdas[j]);
                set.dual_values.push(lambdas[j].conj());
                set.right.push(x);
                set.left.push(y);
                done[j] = true;
            }
        }
        finish_pairs(&mut set, &self.a, &self.b, self.real)?;
        Ok(set)
    }
}

/// Inverse iteration kept orthogonal to `against`.
fn iterate(start: &[C64], against: &[Vec<C64>], solve: impl Fn(&[C64]) -> Vec<C64>) -> Vec<C64> {
    let mut z = start.to_vec();
    for _ in 0..INVERSE_ITERATIONS {
        z = solve(&z);
        for v in against {
            let h = dot(v, &z);
            axpy(-h, v, &mut z);
        }
        let nrm = norm2(&z);
        z.iter_mut().for_each(|t| *t /= nrm);
    }
    z
}

/// All finite eigenpairs of the dense pencil.
pub fn dense_pencil_eig(a: &DenseMatrix, b: &DenseMatrix) -> Result<EigenPairSet> {
    let p = DensePencil::new(a, b)?;
    p.pairs(&p.eigenvalues())
}
