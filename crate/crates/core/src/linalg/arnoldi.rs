//! Shift-invert Krylov-Schur for `A x = lambda B x`.
//!
//! The operator `(A - sigma B)^{-1} B` has eigenvalues `nu = 1/(lambda - sigma)`,
//! so the eigenvalues of the pencil nearest `sigma` are its dominant ones.
//! Multiple eigenvalues are handled by deflation rounds: after a round
//! converges its Schur vectors are locked, the next round runs on the
//! orthogonal complement, and rounds continue while they uncover values
//! that beat the current selection. Left vectors come from the same
//! procedure applied to the adjoint operator `B^H (A - sigma B)^{-H}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{reorder_schur, schur, triangular_right_eigvec, DenseMatrix};
use super::eigpairs::EigenPairSet;
use super::lu::SparseLu;
use super::operator::LinearMap;
use super::scalar::{axpy, c64, dot, norm2, C64};
use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Ritz values below this modulus correspond to infinite eigenvalues.
pub const INFINITE_GUARD: f64 = 1e-12;

/// Relative distance under which Ritz values count as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Eigenvalues whose imaginary part is below this fraction of the modulus
/// are treated as real for real pencils.
pub const REAL_TOL: f64 = 1e-8;

/// A pencil together with a factorization of `A - sigma B`.
pub trait ShiftInvert {
    fn dim(&self) -> usize;
    fn shift(&self) -> C64;
    /// Whether `A` and `B` are real, so the spectrum is conjugate-symmetric.
    fn is_real(&self) -> bool;
    fn a(&self) -> &dyn LinearMap;
    fn b(&self) -> &dyn LinearMap;
    /// `(A - sigma B)^{-1} x`
    fn solve(&self, x: &[C64]) -> Vec<C64>;
    /// `(A - sigma B)^{-H} x`
    fn solve_adjoint(&self, x: &[C64]) -> Vec<C64>;

    /// `(A - sigma B)^{-1} B x`
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.solve(&self.b().apply(x))
    }

    /// `B^H (A - sigma B)^{-H} x`
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.b().apply_adjoint(&self.solve_adjoint(x))
    }
}

/// Sparse LU of `A - sigma B` for real `A`, `B`; real when the shift is.
pub enum ShiftedLu {
    Real(SparseLu<f64>),
    Complex(SparseLu<C64>),
}

impl ShiftedLu {
    pub fn new(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>, sigma: C64, ordering: Option<&[usize]>) -> Result<Self> {
        Ok(if sigma.im == 0.0 {
            ShiftedLu::Real(SparseLu::factor(&a.linear_combination(1.0, b, -sigma.re), ordering)?)
        } else {
            let shifted = a.to_complex().linear_combination(c64(1.0, 0.0), &b.to_complex(), -sigma);
            ShiftedLu::Complex(SparseLu::factor(&shifted, ordering)?)
        })
    }

    pub fn solve(&self, x: &[C64]) -> Vec<C64> {
        match self {
            ShiftedLu::Real(f) => f.solve(x),
            ShiftedLu::Complex(f) => f.solve(x),
        }
    }

    pub fn solve_adjoint(&self, x: &[C64]) -> Vec<C64> {
        match self {
            ShiftedLu::Real(f) => f.solve_transposed(x, true),
            ShiftedLu::Complex(f) => f.solve_transposed(x, true),
        }
    }
}

/// Sparse real pencil with a sparse LU of `A - sigma B`.
pub struct SparsePencil<'a> {
    a: &'a CsrMatrix<f64>,
    b: &'a CsrMatrix<f64>,
    sigma: C64,
    factor: ShiftedLu,
}

impl<'a> SparsePencil<'a> {
    pub fn new(a: &'a CsrMatrix<f64>, b: &'a CsrMatrix<f64>, sigma: C64, ordering: Option<&[usize]>) -> Result<Self> {
        let factor = ShiftedLu::new(a, b, sigma, ordering)?;
        Ok(SparsePencil { a, b, sigma, factor })
    }
}

impl ShiftInvert for SparsePencil<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn shift(&self) -> C64 {
        self.sigma
    }
    fn is_real(&self) -> bool {
        true
    }
    fn a(&self) -> &dyn LinearMap {
        self.a
    }
    fn b(&self) -> &dyn LinearMap {
        self.b
    }
    fn solve(&self, x: &[C64]) -> Vec<C64> {
        self.factor.solve(x)
    }
    fn solve_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.factor.solve_adjoint(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Number of eigenvalues wanted.
    pub q: usize,
    /// Krylov subspace dimension; `None` picks `max(2q + 8, 20)`.
    pub krylov_dim: Option<usize>,
    /// Relative Ritz residual tolerance.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl ArnoldiOptions {
    pub fn new(q: usize) -> Self {
        ArnoldiOptions {
            q,
            krylov_dim: None,
            tol: 1e-10,
            max_restarts: 50,
            seed: 0x7e5eed,
        }
    }

    fn dim(&self, n: usize) -> Result<usize> {
        let m = self.krylov_dim.unwrap_or((2 * self.q + 8).max(20));
        if m < 2 * self.q + 8 {
            return Err(Error::Config(format!("krylov_dim {m} is below 2q + 8 = {}", 2 * self.q + 8)));
        }
        Ok(m.min(n.saturating_sub(1)).max(1))
    }
}

/// Orthonormal `basis` with `op basis = basis t`, `t` upper triangular.
struct PartialSchur {
    basis: Vec<Vec<C64>>,
    t: DenseMatrix,
}

/// Orthogonalizes `w` against `basis` twice, returning the coefficients.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut coeff = vec![C64::default(); basis.len()];
    for _ in 0..2 {
        for (c, v) in coeff.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeff
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, against: &[Vec<C64>]) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..n).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        orthogonalize(against, &mut v);
        let nrm = norm2(&v);
        if nrm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= nrm);
            return v;
        }
    }
}

/// Linear combination `sum_k coeff[k] * vecs[k]`.
fn combine(vecs: &[Vec<C64>], coeff: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::default(); vecs[0].len()];
    for (v, &c) in vecs.iter().zip(coeff) {
        if c != C64::default() {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// One Krylov-Schur run on the complement of `locked`, converging the
/// `want` dominant Ritz values. Returns the new Schur vectors, their
/// triangular factor and the coupling `locked^H op new`.
fn krylov_schur_round(
    op: &dyn Fn(&[C64]) -> Vec<C64>,
    n: usize,
    locked: &[Vec<C64>],
    want: usize,
    m: usize,
    opts: &ArnoldiOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<C64>>, DenseMatrix, DenseMatrix)> {
    let p = locked.len();
    let m = m.min(n - p);
    let want = want.min(m);
    let keep = (2 * want).max(m / 2).min(m.saturating_sub(1)).max(want);
    let mut v: Vec<Vec<C64>> = vec![random_unit(n, rng, locked)];
    let mut h = DenseMatrix::zeros(m + 1, m);
    let mut g = DenseMatrix::zeros(p, m);
    let mut k = 0;
    let mut restarts = 0;
    loop {
        for j in k..m {
            let mut w = op(&v[j]);
            let gc = orthogonalize(locked, &mut w);
            for (i, c) in gc.into_iter().enumerate() {
                g[(i, j)] = c;
            }
            let hc = orthogonalize(&v, &mut w);
            for (i, c) in hc.into_iter().enumerate() {
                h[(i, j)] = c;
            }
            let beta = norm2(&w);
            let scale = (0..=j).map(|i| h[(i, j)].norm()).fold(beta, f64::max);
            if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue with a fresh direction
                h[(j + 1, j)] = C64::default();
                let mut all = locked.to_vec();
                all.extend(v.iter().cloned());
                v.push(random_unit(n, rng, &all));
            } else {
                h[(j + 1, j)] = c64(beta, 0.0);
                w.iter_mut().for_each(|z| *z /= beta);
                v.push(w);
            }
        }
        let hm = h.submatrix(0..m, 0..m);
        let (mut t, mut z) = schur(&hm)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| t[(b, b)].norm().partial_cmp(&t[(a, a)].norm()).unwrap().then(a.cmp(&b)));
        reorder_schur(&mut t, &mut z, &order[..keep]);
        // residual row b^T Z of the Krylov-Schur relation
        let brow: Vec<C64> = (0..keep).map(|c| (0..m).map(|i| h[(m, i)] * z[(i, c)]).sum()).collect();
        let res: Vec<f64> = (0..want).map(|i| brow[i].norm() / t[(i, i)].norm().max(f64::MIN_POSITIVE)).collect();
        let converged = res.iter().all(|&r| r <= opts.tol);
        let vz = |cols: usize| -> Vec<Vec<C64>> {
            (0..cols)
                .map(|c| combine(&v[..m], &(0..m).map(|i| z[(i, c)]).collect::<Vec<_>>()))
                .collect()
        };
        let gz = |cols: usize| -> DenseMatrix {
            DenseMatrix::from_fn(p, cols, |r, c| (0..m).map(|i| g[(r, i)] * z[(i, c)]).sum())
        };
        if converged {
            return Ok((vz(want), t.submatrix(0..want, 0..want), gz(want)));
        }
        restarts += 1;
        if restarts > opts.max_restarts {
            return Err(Error::NoConvergence {
                restarts: opts.max_restarts,
                residuals: res,
            });
        }
        let mut nv = vz(keep);
        nv.push(v[m].clone());
        let ng = gz(keep);
        let mut nh = DenseMatrix::zeros(m + 1, m);
        for c in 0..keep {
            for r in 0..=c {
                nh[(r, c)] = t[(r, c)];
            }
            nh[(keep, c)] = brow[c];
        }
        let mut gnew = DenseMatrix::zeros(p, m);
        for c in 0..keep {
            for r in 0..p {
                gnew[(r, c)] = ng[(r, c)];
            }
        }
        v = nv;
        h = nh;
        g = gnew;
        k = keep;
    }
}

/// Partial Schur form holding (at least) the `q` dominant eigenvalues of
/// `op`, including every copy of a multiple one.
fn dominant_schur(op: &dyn Fn(&[C64]) -> Vec<C64>, n: usize, opts: &ArnoldiOptions) -> Result<PartialSchur> {
    let m = opts.dim(n)?;
    let q = opts.q.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (basis, t, _) = krylov_schur_round(op, n, &[], q, m, opts, &mut rng)?;
    let mut ps = PartialSchur { basis, t };
    for _ in 0..=q {
        if ps.basis.len() + m + 1 > n {
            break;
        }
        let mut mags: Vec<f64> = (0..ps.t.nrows()).map(|i| ps.t[(i, i)].norm()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let threshold = mags[q.min(mags.len()) - 1];
        let (nb, nt, ng) = krylov_schur_round(op, n, &ps.basis, q, m, opts, &mut rng)?;
        let better = (0..nt.nrows()).any(|i| nt[(i, i)].norm() > threshold * (1.0 + CLUSTER_TOL));
        if !better {
            break;
        }
        // append the new block to the Schur form
        let p = ps.t.nrows();
        let r = nt.nrows();
        let mut t = DenseMatrix::zeros(p + r, p + r);
        for c in 0..p {
            for i in 0..=c {
                t[(i, c)] = ps.t[(i, c)];
            }
        }
        for c in 0..r {
            for i in 0..p {
                t[(i, p + c)] = ng[(i, c)];
            }
            for i in 0..=c {
                t[(p + i, p + c)] = nt[(i, c)];
            }
        }
        ps.basis.extend(nb);
        ps.t = t;
    }
    Ok(ps)
}

/// Eigenvectors (in the full space) and Ritz values of the `count` most
/// dominant diagonal entries of a partial Schur form.
fn dominant_vectors(ps: &PartialSchur, count: usize) -> Vec<(C64, Vec<C64>)> {
    let p = ps.t.nrows();
    let mut order: Vec<usize> = (0..p).filter(|&i| ps.t[(i, i)].norm() > INFINITE_GUARD).collect();
    order.sort_by(|&a, &b| ps.t[(b, b)].norm().partial_cmp(&ps.t[(a, a)].norm()).unwrap().then(a.cmp(&b)));
    order.truncate(count);
    order
        .into_iter()
        .map(|i| {
            let y = triangular_right_eigvec(&ps.t, i, CLUSTER_TOL);
            (ps.t[(i, i)], combine(&ps.basis, &y))
        })
        .collect()
}

/// The `q` eigenvalues of `A x = lambda B x` nearest the shift, with right
/// and left vectors normalized to unit A-norm. Real pencils return a set
/// closed under conjugation, which may hold more than `q` values.
pub fn arnoldi_shift_invert(pencil: &dyn ShiftInvert, opts: &ArnoldiOptions) -> Result<EigenPairSet> {
    let n = pencil.dim();
    let sigma = pencil.shift();
    let q = opts.q.min(n);

    let right_op = |x: &[C64]| pencil.apply(x);
    let right = dominant_vectors(&dominant_schur(&right_op, n, opts)?, q);
    let left_op = |x: &[C64]| pencil.apply_adjoint(x);
    let left_opts = ArnoldiOptions {
        seed: opts.seed.wrapping_add(1),
        ..*opts
    };
    let left = dominant_vectors(&dominant_schur(&left_op, n, &left_opts)?, q);

    let mut set = EigenPairSet::default();
    let mut used = vec![false; left.len()];
    for (nu, x) in right {
        let lam = sigma + 1.0 / nu;
        // dual eigenvalue conj(sigma) + 1/mu should equal conj(lam)
        let best = (0..left.len())
            .filter(|&l| !used[l])
            .min_by(|&a, &b| {
                let da = (sigma.conj() + 1.0 / left[a].0 - lam.conj()).norm();
                let db = (sigma.conj() + 1.0 / left[b].0 - lam.conj()).norm();
                da.partial_cmp(&db).unwrap()
            })
            .ok_or_else(|| Error::Matching("dual solve returned fewer eigenvalues".into()))?;
        used[best] = true;
        let (mu, z) = &left[best];
        set.values.push(lam);
        set.dual_values.push(sigma.conj() + 1.0 / mu);
        set.right.push(x);
        set.left.push(pencil.solve_adjoint(z));
    }
    finish_pairs(&mut set, pencil.a(), pencil.b(), pencil.is_real())?;
    Ok(set)
}

/// Shared post-processing: normalization, real snapping, cluster
/// biorthogonalization, residuals, conjugate closure and ordering.
pub fn finish_pairs(set: &mut EigenPairSet, a: &dyn LinearMap, b: &dyn LinearMap, real: bool) -> Result<()> {
    set.normalize(&a)?;
    if real {
        set.make_real(&a, REAL_TOL, 1e-6);
        set.normalize(&a)?;
    }
    set.biorthogonalize(&a, 1e-6)?;
    set.compute_residuals(&a, &b);
    if real {
        set.close_under_conjugation(REAL_TOL, 1e-6);
    }
    set.sort_by_magnitude();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::eigenvalues;

    fn diag_pencil() -> (CsrMatrix<f64>, CsrMatrix<f64>) {
        let a = CsrMatrix::from_triplets(4, 4, (0..4).map(|i| (i, i, (i + 1) as f64)));
        (a, CsrMatrix::identity(4))
    }

    #[test]
    fn diagonal_pencil() {
        let (a, b) = diag_pencil();
        let p = SparsePencil::new(&a, &b, c64(0.9, 0.0), None).unwrap();
        let mut opts = ArnoldiOptions::new(2);
        opts.krylov_dim = Some(12);
        let set = arnoldi_shift_invert(&p, &opts).unwrap();
        assert_eq!(set.len(), 2);
        assert!((set.values[0] - c64(1.0, 0.0)).norm() < 1e-12);
        assert!((set.values[1] - c64(2.0, 0.0)).norm() < 1e-12);
        for j in 0..2 {
            for (i, z) in set.right[j].iter().enumerate() {
                let e = if i == j { 1.0 / ((j + 1) as f64).sqrt() } else { 0.0 };
                assert!((z - c64(e, 0.0)).norm() < 1e-10);
            }
            assert!(set.right[j].iter().zip(&set.left[j]).all(|(x, y)| (x - y).norm() < 1e-10));
        }
    }

    fn random_pencil(n: usize, seed: u64) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        for i in 0..n {
            ta.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            tb.push((i, i, rng.gen_range(-1.0..1.0)));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                let v: f64 = rng.gen_range(-0.5..0.5);
                ta.push((i, j, v));
                ta.push((j, i, v));
                tb.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        (CsrMatrix::from_triplets(n, n, ta), CsrMatrix::from_triplets(n, n, tb))
    }

    fn dense(m: &CsrMatrix<f64>) -> DenseMatrix {
        let d = m.to_dense();
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| c64(d[i][j], 0.0))
    }

    #[test]
    fn matches_dense_spectrum_and_dual() {
        let n = 60;
        let (a, b) = random_pencil(n, 7);
        let sigma = c64(0.3, 0.2);
        let p = SparsePencil::new(&a, &b, sigma, None).unwrap();
        let set = arnoldi_shift_invert(&p, &ArnoldiOptions::new(3)).unwrap();
        // oracle: eigenvalues of A^{-1} B are 1/lambda
        let lu = crate::linalg::dense::DenseLu::factor(&dense(&a), false).unwrap();
        let db = dense(&b);
        let cols: Vec<Vec<C64>> = (0..n).map(|j| lu.solve(db.col(j))).collect();
        let mut all: Vec<C64> = eigenvalues(&DenseMatrix::from_columns(n, &cols))
            .unwrap()
            .into_iter()
            .filter(|v| v.norm() > 1e-12)
            .map(|v| 1.0 / v)
            .collect();
        all.sort_by(|x, y| (x - sigma).norm().partial_cmp(&(y - sigma).norm()).unwrap());
        for lam in &all[..3] {
            assert!(set.values.iter().any(|v| (v - lam).norm() < 1e-8 * lam.norm()), "{lam}");
        }
        for (v, d) in set.values.iter().zip(&set.dual_values) {
            assert!((v - d.conj()).norm() < 1e-8 * v.norm());
        }
        for r in set.right_residuals.iter().chain(&set.left_residuals) {
            assert!(*r < 1e-8);
        }
        // conjugate closure of the real pencil
        for v in &set.values {
            if v.im.abs() > 1e-8 {
                assert!(set.values.iter().any(|w| (w - v.conj()).norm() < 1e-8 * v.norm()));
            }
        }
    }

    #[test]
    fn double_eigenvalue_yields_two_vectors() {
        let a = CsrMatrix::from_triplets(30, 30, (0..30).map(|i| (i, i, [1.0, 1.0].get(i).copied().unwrap_or(3.0 + i as f64))));
        let b = CsrMatrix::identity(30);
        let p = SparsePencil::new(&a, &b, c64(0.5, 0.0), None).unwrap();
        let set = arnoldi_shift_invert(&p, &ArnoldiOptions::new(3)).unwrap();
        assert!((set.values[0] - c64(1.0, 0.0)).norm() < 1e-10);
        assert!((set.values[1] - c64(1.0, 0.0)).norm() < 1e-10);
        assert!((set.values[2] - c64(5.0, 0.0)).norm() < 1e-10);
        // the two vectors for the double value span its eigenspace
        let x0 = &set.right[0];
        let x1 = &set.right[1];
        let det = x0[0] * x1[1] - x0[1] * x1[0];
        assert!(det.norm() > 1e-3);
    }

    #[test]
    fn singular_shift_is_reported() {
        let (a, b) = diag_pencil();
        assert!(matches!(
            SparsePencil::new(&a, &b, c64(2.0, 0.0), None),
            Err(Error::Singular { .. })
        ));
    }
}
