//! The eigenproblem on the enriched space
//! `(S_H + span{u-parts}) x (S_H + span{w-parts})`.
//!
//! Enrichment vectors are split into real and imaginary parts, made
//! orthogonal to the prolonged coarse space (in the `K` inner product for
//! the `u` block, in the `M` inner product for the `w` block) and
//! orthonormalized. The reduced `A` is then `diag(K_c, M_c, I, I)` and the
//! reduced `B` is sparse on the coarse block with a dense border.

use crate::assembly::FormBlocks;
use crate::bfs::ProductLayout;
use crate::linalg::arnoldi::{arnoldi_shift_invert, ArnoldiOptions, ShiftInvert, ShiftedLu};
use crate::linalg::dense::{DenseLu, DenseMatrix};
use crate::linalg::scalar::c64;
use crate::linalg::{CsrMatrix, DensePencil, EigenPairSet, LinearMap, SparseLu, C64};
use crate::{Error, Result};

use super::matching::match_pairs;

/// Relative norm under which an enrichment direction counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Coarse-space data shared by all correction steps at one fine level.
pub struct CoarseRestriction<'a> {
    /// Cumulative prolongation from level 1 to the fine level.
    pub p: &'a CsrMatrix<f64>,
    /// `P^T X P` for every block of the fine forms.
    pub blocks: FormBlocks,
    /// Fill-reducing order of the level-1 product space.
    pub ordering: Vec<usize>,
    k_lu: SparseLu<f64>,
    m_lu: SparseLu<f64>,
}

impl<'a> CoarseRestriction<'a> {
    pub fn new(p: &'a CsrMatrix<f64>, fine: &FormBlocks, coarse_layout: &ProductLayout) -> Result<Self> {
        let blocks = fine.restrict(p);
        let scalar = coarse_layout.space().nested_dissection();
        let k_lu = SparseLu::factor(&blocks.stiffness, Some(&scalar))?;
        let m_lu = SparseLu::factor(&blocks.mass, Some(&scalar))?;
        Ok(CoarseRestriction {
            p,
            blocks,
            ordering: coarse_layout.ordering(),
            k_lu,
            m_lu,
        })
    }

    pub fn coarse_dim(&self) -> usize {
        self.p.ncols()
    }
}

/// Real basis of the enrichment of one block, orthogonal to the coarse space
/// and orthonormal in the inner product of `gram`.
fn enrichment_basis(
    raw: &[Vec<C64>],
    gram: &CsrMatrix<f64>,
    coarse_lu: &SparseLu<f64>,
    p: &CsrMatrix<f64>,
) -> Vec<Vec<f64>> {
    let inner = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(gram.mul_vec(y)).map(|(a, b)| a * b).sum() };
    let mut cand: Vec<Vec<f64>> = Vec::new();
    for v in raw {
        cand.push(v.iter().map(|z| z.re).collect());
        cand.push(v.iter().map(|z| z.im).collect());
    }
    let scale = cand.iter().map(|c| inner(c, c).max(0.0).sqrt()).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut c in cand {
        for _ in 0..2 {
            // remove the gram-orthogonal projection onto range(P)
            let rhs = p.tr_mul_vec(&gram.mul_vec(&c), false);
            let coeff = coarse_lu.solve(&rhs);
            let proj = p.mul_vec(&coeff);
            c.iter_mut().zip(&proj).for_each(|(a, b)| *a -= b);
            for b in &basis {
                let h = inner(b, &c);
                c.iter_mut().zip(b).for_each(|(a, bb)| *a -= h * bb);
            }
        }
        let nrm = inner(&c, &c).max(0.0).sqrt();
        if nrm > RANK_TOL * scale {
            c.iter_mut().for_each(|a| *a /= nrm);
            basis.push(c);
        }
    }
    basis
}

/// Sparse coarse block with a dense border: `[[cc, ce], [ec, ee]]`.
pub struct BorderedMatrix {
    cc: CsrMatrix<f64>,
    ce: DenseMatrix,
    ec: DenseMatrix,
    ee: DenseMatrix,
}

impl BorderedMatrix {
    fn nc(&self) -> usize {
        self.cc.nrows()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let nc = self.nc();
        let d = self.cc.to_dense();
        DenseMatrix::from_fn(nc + self.ee.nrows(), nc + self.ee.ncols(), |i, j| match (i < nc, j < nc) {
            (true, true) => c64(d[i][j], 0.0),
            (true, false) => self.ce[(i, j - nc)],
            (false, true) => self.ec[(i - nc, j)],
            (false, false) => self.ee[(i - nc, j - nc)],
        })
    }
}

impl LinearMap for BorderedMatrix {
    fn nrows(&self) -> usize {
        self.nc() + self.ee.nrows()
    }
    fn ncols(&self) -> usize {
        self.nc() + self.ee.ncols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let (xc, xe) = x.split_at(self.nc());
        let mut yc: Vec<C64> = self.cc.mul_vec(xc);
        yc.iter_mut().zip(self.ce.mul_vec(xe)).for_each(|(a, b)| *a += b);
        let mut ye = self.ec.mul_vec(xc);
        ye.iter_mut().zip(self.ee.mul_vec(xe)).for_each(|(a, b)| *a += b);
        yc.extend(ye);
        yc
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let (xc, xe) = x.split_at(self.nc());
        let mut yc: Vec<C64> = self.cc.tr_mul_vec(xc, true);
        yc.iter_mut().zip(self.ec.adjoint_mul_vec(xe)).for_each(|(a, b)| *a += b);
        let mut ye = self.ce.adjoint_mul_vec(xc);
        ye.iter_mut().zip(self.ee.adjoint_mul_vec(xe)).for_each(|(a, b)| *a += b);
        yc.extend(ye);
        yc
    }
}

/// Shift-invert on a bordered pencil through a sparse LU of the coarse
/// block and a dense Schur complement for the border.
struct BorderedPencil<'a> {
    a: &'a BorderedMatrix,
    b: &'a BorderedMatrix,
    sigma: C64,
    lu: ShiftedLu,
    /// `S_cc^{-1} S_ce`
    z: Vec<Vec<C64>>,
    /// `S_cc^{-H} S_ec^H`
    zh: Vec<Vec<C64>>,
    s_ec: DenseMatrix,
    s_ce: DenseMatrix,
    schur: DenseLu,
}

impl<'a> BorderedPencil<'a> {
    fn new(a: &'a BorderedMatrix, b: &'a BorderedMatrix, sigma: C64, ordering: &[usize]) -> Result<Self> {
        let lu = ShiftedLu::new(&a.cc, &b.cc, sigma, Some(ordering))?;
        let comb = |x: &DenseMatrix, y: &DenseMatrix| DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - sigma * y[(i, j)]);
        let s_ce = comb(&a.ce, &b.ce);
        let s_ec = comb(&a.ec, &b.ec);
        let s_ee = comb(&a.ee, &b.ee);
        let r = s_ee.nrows();
        let z: Vec<Vec<C64>> = (0..r).map(|j| lu.solve(s_ce.col(j))).collect();
        let s_ec_h = s_ec.adjoint();
        let zh: Vec<Vec<C64>> = (0..r).map(|j| lu.solve_adjoint(s_ec_h.col(j))).collect();
        let zm = DenseMatrix::from_columns(a.nc(), &z);
        let sz = s_ec.matmul(&zm);
        let schur = DenseLu::factor(&DenseMatrix::from_fn(r, r, |i, j| s_ee[(i, j)] - sz[(i, j)]), false)?;
        Ok(BorderedPencil {
            a,
            b,
            sigma,
            lu,
            z,
            zh,
            s_ec,
            s_ce,
            schur,
        })
    }
}

impl ShiftInvert for BorderedPencil<'_> {
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
    fn solve(&self, f: &[C64]) -> Vec<C64> {
        let (fc, fe) = f.split_at(self.a.nc());
        let mut t = self.lu.solve(fc);
        let st = self.s_ec.mul_vec(&t);
        let rhs: Vec<C64> = fe.iter().zip(st).map(|(a, b)| a - b).collect();
        let xe = self.schur.solve(&rhs);
        for (zj, &xj) in self.z.iter().zip(&xe) {
            t.iter_mut().zip(zj).for_each(|(a, b)| *a -= b * xj);
        }
        t.extend(xe);
        t
    }
    fn solve_adjoint(&self, f: &[C64]) -> Vec<C64> {
        let (fc, fe) = f.split_at(self.a.nc());
        let mut t = self.lu.solve_adjoint(fc);
        let st = self.s_ce.adjoint_mul_vec(&t);
        let rhs: Vec<C64> = fe.iter().zip(st).map(|(a, b)| a - b).collect();
        let xe = self.schur.solve_adjoint(&rhs);
        for (zj, &xj) in self.zh.iter().zip(&xe) {
            t.iter_mut().zip(zj).for_each(|(a, b)| *a -= b * xj);
        }
        t.extend(xe);
        t
    }
}

/// How the reduced eigenproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSolver {
    /// Reduced dimensions up to this use the dense solver.
    pub dense_limit: usize,
    /// Shift and Krylov settings for larger reduced problems.
    pub shift: C64,
    pub arnoldi: ArnoldiOptions,
}

/// Outcome of one enriched-space solve.
pub struct EnrichedSolution {
    /// Pairs expanded to the fine level, in the order of `previous`.
    pub pairs: EigenPairSet,
    pub reduced_dim: usize,
    pub enrichment_rank: usize,
    /// Largest `|Q^H (A x - lambda B x)|` relative to `|Q^H A x|`.
    pub galerkin_residual: f64,
}

/// Builds the enriched space from raw fine-level vectors and solves the
/// reduced pencil, tracking the eigenvalues in `previous`.
pub fn enriched_solve(
    layout: &ProductLayout,
    fine: &FormBlocks,
    coarse: &CoarseRestriction,
    raw: &[Vec<C64>],
    previous: &[C64],
    solver: &ReducedSolver,
) -> Result<EnrichedSolution> {
    let p = coarse.p;
    let nc = coarse.coarse_dim();
    let raw_u: Vec<Vec<C64>> = raw.iter().map(|x| layout.split(x).0.to_vec()).collect();
    let raw_w: Vec<Vec<C64>> = raw.iter().map(|x| layout.split(x).1.to_vec()).collect();
    let eu = enrichment_basis(&raw_u, &fine.stiffness, &coarse.k_lu, p);
    let ew = enrichment_basis(&raw_w, &fine.mass, &coarse.m_lu, p);
    if eu.is_empty() && ew.is_empty() {
        return Err(Error::RankCollapse(
            "enrichment vectors lie in the coarse space; try a tighter tolerance or another shift".into(),
        ));
    }
    let (ru, rw) = (eu.len(), ew.len());
    let r = ru + rw;

    // fine products of the enrichment directions
    let g_eu: Vec<Vec<f64>> = eu.iter().map(|e| fine.gradient.mul_vec(e)).collect();
    let gt_eu: Vec<Vec<f64>> = eu.iter().map(|e| fine.gradient.tr_mul_vec(e, false)).collect();
    let m_eu: Vec<Vec<f64>> = eu.iter().map(|e| fine.mass.mul_vec(e)).collect();
    let mn_ew: Vec<Vec<f64>> = ew.iter().map(|e| fine.weighted_mass.mul_vec(e)).collect();
    let m_ew: Vec<Vec<f64>> = ew.iter().map(|e| fine.mass.mul_vec(e)).collect();
    let pt = |v: &[f64]| p.tr_mul_vec(v, false);
    let ip = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };

    let a_cc = CsrMatrix::block_2x2(
        [[Some(&coarse.blocks.stiffness), None], [None, Some(&coarse.blocks.mass)]],
        ([nc, nc], [nc, nc]),
    );
    let neg_mn = coarse.blocks.weighted_mass.scaled(-1.0);
    let b_cc = CsrMatrix::block_2x2(
        [[Some(&coarse.blocks.gradient), Some(&neg_mn)], [Some(&coarse.blocks.mass), None]],
        ([nc, nc], [nc, nc]),
    );
    // border columns: trial functions (eu | ew) tested against (coarse u | coarse w)
    let mut b_ce = DenseMatrix::zeros(2 * nc, r);
    let mut b_ec = DenseMatrix::zeros(r, 2 * nc);
    let mut b_ee = DenseMatrix::zeros(r, r);
    for k in 0..ru {
        let top = pt(&g_eu[k]);
        let bottom = pt(&m_eu[k]);
        for i in 0..nc {
            b_ce[(i, k)] = c64(top[i], 0.0);
            b_ce[(nc + i, k)] = c64(bottom[i], 0.0);
        }
        // test eu against coarse u trial: (G^T e)^T P
        let row = pt(&gt_eu[k]);
        // test eu against coarse w trial: -(Mn e)^T P
        let roww = pt(&fine.weighted_mass.mul_vec(&eu[k]));
        for i in 0..nc {
            b_ec[(k, i)] = c64(row[i], 0.0);
            b_ec[(k, nc + i)] = c64(-roww[i], 0.0);
        }
    }
    for k in 0..rw {
        let top = pt(&mn_ew[k]);
        for i in 0..nc {
            b_ce[(i, ru + k)] = c64(-top[i], 0.0);
        }
        let row = pt(&m_ew[k]);
        for i in 0..nc {
            b_ec[(ru + k, i)] = c64(row[i], 0.0);
        }
    }
    for i in 0..ru {
        for j in 0..ru {
            b_ee[(i, j)] = c64(ip(&eu[i], &g_eu[j]), 0.0);
        }
        for j in 0..rw {
            b_ee[(i, ru + j)] = c64(-ip(&eu[i], &mn_ew[j]), 0.0);
        }
    }
    for i in 0..rw {
        for j in 0..ru {
            b_ee[(ru + i, j)] = c64(ip(&ew[i], &m_eu[j]), 0.0);
        }
    }
    let a_r = BorderedMatrix {
        cc: a_cc,
        ce: DenseMatrix::zeros(2 * nc, r),
        ec: DenseMatrix::zeros(r, 2 * nc),
        ee: DenseMatrix::identity(r),
    };
    let b_r = BorderedMatrix {
        cc: b_cc,
        ce: b_ce,
        ec: b_ec,
        ee: b_ee,
    };
    let dim = 2 * nc + r;

    let reduced = if dim <= solver.dense_limit {
        let dp = DensePencil::new(&a_r.to_dense(), &b_r.to_dense())?;
        let cand = dp.eigenvalues();
        let pick = match_pairs(previous, &cand)?;
        let lams: Vec<C64> = pick.iter().map(|&j| cand[j]).collect();
        let set = dp.pairs(&lams)?;
        reorder_to(&set, &lams)
    } else {
        let bp = BorderedPencil::new(&a_r, &b_r, solver.shift, &coarse.ordering)?;
        let opts = ArnoldiOptions {
            q: previous.len() + 2,
            ..solver.arnoldi
        };
        let set = arnoldi_shift_invert(&bp, &opts)?;
        let pick = match_pairs(previous, &set.values)?;
        set.select(&pick)
    };

    // Galerkin residual of the reduced problem
    let mut galerkin = 0.0f64;
    for (lam, x) in reduced.values.iter().zip(&reduced.right) {
        let ax = a_r.apply(x);
        let bx = b_r.apply(x);
        let res: f64 = ax.iter().zip(&bx).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt();
        let nrm: f64 = ax.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        galerkin = galerkin.max(res / nrm);
    }

    // expand reduced vectors to the fine level
    let expand = |c: &[C64]| -> Vec<C64> {
        let (cu, rest) = c.split_at(nc);
        let (cw, ce) = rest.split_at(nc);
        let mut u: Vec<C64> = p.mul_vec(cu);
        let mut w: Vec<C64> = p.mul_vec(cw);
        for (k, e) in eu.iter().enumerate() {
            u.iter_mut().zip(e).for_each(|(a, b)| *a += ce[k] * b);
        }
        for (k, e) in ew.iter().enumerate() {
            w.iter_mut().zip(e).for_each(|(a, b)| *a += ce[ru + k] * b);
        }
        layout.join(&u, &w)
    };
    let mut pairs = EigenPairSet {
        values: reduced.values.clone(),
        dual_values: reduced.dual_values.clone(),
        right: reduced.right.iter().map(|c| expand(c)).collect(),
        left: reduced.left.iter().map(|c| expand(c)).collect(),
        ..Default::default()
    };
    let a_fine = fine.product_a();
    let b_fine = fine.product_b();
    pairs.normalize(&a_fine)?;
    pairs.compute_residuals(&a_fine, &b_fine);
    Ok(EnrichedSolution {
        pairs,
        reduced_dim: dim,
        enrichment_rank: r,
        galerkin_residual: galerkin,
    })
}

/// Puts the pairs of `set` in the order of `lams` (the set may have been
/// re-sorted internally).
fn reorder_to(set: &EigenPairSet, lams: &[C64]) -> EigenPairSet {
    let mut used = vec![false; set.len()];
    let mut idx = Vec::with_capacity(lams.len());
    for l in lams {
        let j = (0..set.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (set.values[a] - l).norm().partial_cmp(&(set.values[b] - l).norm()).unwrap())
            .unwrap();
        used[j] = true;
        idx.push(j);
    }
    set.select(&idx)
}
