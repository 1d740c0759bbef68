//! Multigrid correction for the transmission eigenvalue pencil.
//!
//! Level 1 is solved directly. Each further level refines the mesh once,
//! solves one boundary value problem per tracked primal and dual
//! eigenvector, and solves a small eigenproblem on the level-1 space
//! enriched by those solutions.

pub mod enriched;
pub mod matching;

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{assemble_blocks, FormMatrices, RefractionField};
use crate::bfs::{build_space, product_prolongation, prolongation, ProductLayout};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::scalar::dot;
use crate::linalg::{arnoldi_shift_invert, ArnoldiOptions, CsrMatrix, EigenPairSet, SparseLu, SparsePencil, C64};
use crate::mesh::{build_mesh, mesh_size, refine_uniform, Domain, RectMesh};
use crate::{Error, Result};

pub use enriched::{enriched_solve, CoarseRestriction, EnrichedSolution, ReducedSolver};
pub use matching::match_pairs;

/// Default largest reduced dimension solved by the dense pencil solver.
pub const DEFAULT_DENSE_LIMIT: usize = 500;

/// Flag threshold of the quasi-biorthogonality diagnostic.
pub const BIORTHOGONALITY_FLOOR: f64 = 1e-3;

/// One mesh level with its space and assembled pencil.
pub struct Discretization {
    pub layout: ProductLayout,
    pub forms: FormMatrices,
}

impl Discretization {
    pub fn new(mesh: Arc<RectMesh>, n: &RefractionField, quad_order: usize) -> Result<Self> {
        let space = Arc::new(build_space(mesh));
        let blocks = assemble_blocks(&space, n, quad_order)?;
        Ok(Discretization {
            layout: ProductLayout::new(space),
            forms: FormMatrices::from_blocks(blocks),
        })
    }

    pub fn mesh(&self) -> &Arc<RectMesh> {
        self.layout.space().mesh()
    }

    pub fn h(&self) -> f64 {
        mesh_size(self.mesh())
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }
}

/// Nested levels with scalar prolongations, grown on demand.
pub struct Hierarchy {
    refraction: RefractionField,
    quad_order: usize,
    levels: Vec<Discretization>,
    /// `steps[i]` maps level `i` to level `i + 1` (0-based).
    steps: Vec<CsrMatrix<f64>>,
    /// `cumulative[i]` maps level 0 to level `i + 1`.
    cumulative: Vec<CsrMatrix<f64>>,
}

impl Hierarchy {
    pub fn new(domain: Domain, coarse_divisions: usize, refraction: RefractionField, quad_order: usize) -> Result<Self> {
        let mesh = Arc::new(build_mesh(domain, coarse_divisions));
        let first = Discretization::new(mesh, &refraction, quad_order)?;
        Ok(Hierarchy {
            refraction,
            quad_order,
            levels: vec![first],
            steps: Vec::new(),
            cumulative: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level `m`, 1-based.
    pub fn level(&self, m: usize) -> &Discretization {
        &self.levels[m - 1]
    }

    /// Prolongation from level `m` to `m + 1`.
    pub fn step(&self, m: usize) -> &CsrMatrix<f64> {
        &self.steps[m - 1]
    }

    /// Prolongation from level 1 to level `m >= 2`.
    pub fn from_coarsest(&self, m: usize) -> &CsrMatrix<f64> {
        &self.cumulative[m - 2]
    }

    /// Adds the next finer level.
    pub fn refine(&mut self) -> Result<()> {
        let last = self.levels.last().unwrap();
        let mesh = Arc::new(refine_uniform(last.mesh()));
        let next = Discretization::new(mesh, &self.refraction, self.quad_order)?;
        let p = prolongation(last.layout.space(), next.layout.space())?;
        let cum = match self.cumulative.last() {
            Some(c) => p.matmul(c),
            None => p.clone(),
        };
        self.steps.push(p);
        self.cumulative.push(cum);
        self.levels.push(next);
        Ok(())
    }
}

/// Settings of a multigrid run.
#[derive(Debug, Clone, PartialEq)]
pub struct MultigridConfig {
    pub domain: Domain,
    pub refraction: RefractionField,
    pub coarse_divisions: usize,
    pub levels: usize,
    pub q: usize,
    pub shift: C64,
    pub quad_order: usize,
    pub arnoldi: ArnoldiOptions,
    /// Reduced problems up to this dimension are solved densely.
    pub dense_limit: usize,
}

impl MultigridConfig {
    pub fn reduced_solver(&self) -> ReducedSolver {
        ReducedSolver {
            dense_limit: self.dense_limit,
            shift: self.shift,
            arnoldi: self.arnoldi,
        }
    }
}

/// Primal-dual A-pairings `G_jl = y_l^H A x_j` of the tracked vectors.
#[derive(Debug, Clone)]
pub struct QuasiBiorthogonality {
    pub gram: DenseMatrix,
    pub max_off_diagonal: f64,
    pub min_diagonal: f64,
    pub violated: bool,
}

pub fn quasi_biorthogonality(pairs: &EigenPairSet, a: &CsrMatrix<f64>) -> QuasiBiorthogonality {
    let q = pairs.len();
    let ax: Vec<Vec<C64>> = pairs.right.iter().map(|x| a.mul_vec(x)).collect();
    let gram = DenseMatrix::from_fn(q, q, |j, l| dot(&pairs.left[l], &ax[j]));
    let mut max_off: f64 = 0.0;
    let mut min_diag = f64::INFINITY;
    for j in 0..q {
        for l in 0..q {
            let v = gram[(j, l)].norm();
            if j == l {
                min_diag = min_diag.min(v);
            } else {
                max_off = max_off.max(v);
            }
        }
    }
    QuasiBiorthogonality {
        gram,
        max_off_diagonal: max_off,
        min_diagonal: min_diag,
        violated: min_diag < BIORTHOGONALITY_FLOOR,
    }
}

/// Result for one level of the scheme.
#[derive(Debug, Clone)]
pub struct LevelState {
    /// 1-based level index.
    pub level: usize,
    pub h: f64,
    /// Eigenpairs with fine-level vectors, in tracking order.
    pub pairs: EigenPairSet,
    pub biorthogonality: QuasiBiorthogonality,
    pub seconds: f64,
    /// Dimension of the reduced problem (0 for a direct solve).
    pub reduced_dim: usize,
    pub galerkin_residual: f64,
}

impl LevelState {
    pub fn eigenvalues(&self) -> &[C64] {
        &self.pairs.values
    }
}

/// Direct shift-invert solve of one level's pencil.
pub fn coarse_solve(level: &Discretization, shift: C64, opts: &ArnoldiOptions) -> Result<LevelState> {
    let start = Instant::now();
    let f = &level.forms;
    let ordering = level.layout.ordering();
    let pencil = SparsePencil::new(&f.a, &f.b, shift, Some(&ordering))?;
    let pairs = arnoldi_shift_invert(&pencil, opts)?;
    let biorthogonality = quasi_biorthogonality(&pairs, &f.a);
    Ok(LevelState {
        level: level.mesh().level(),
        h: level.h(),
        pairs,
        biorthogonality,
        seconds: start.elapsed().as_secs_f64(),
        reduced_dim: 0,
        galerkin_residual: 0.0,
    })
}

/// Factorization of `A = diag(K, M)` for the boundary value problems.
pub struct BvpSolver {
    n: usize,
    k: SparseLu<f64>,
    m: SparseLu<f64>,
}

impl BvpSolver {
    pub fn new(level: &Discretization) -> Result<Self> {
        let order = level.layout.space().nested_dissection();
        Ok(BvpSolver {
            n: level.layout.block_dim(),
            k: SparseLu::factor(&level.forms.blocks.stiffness, Some(&order))?,
            m: SparseLu::factor(&level.forms.blocks.mass, Some(&order))?,
        })
    }

    fn solve(&self, f: &[C64], transposed: bool) -> Vec<C64> {
        let (fu, fw) = f.split_at(self.n);
        let (mut u, w) = if transposed {
            (self.k.solve_transposed(fu, false), self.m.solve_transposed(fw, false))
        } else {
            (self.k.solve(fu), self.m.solve(fw))
        };
        u.extend(w);
        u
    }
}

/// Primal problem `A x = lambda B x_prev`.
pub fn bvp_solve(level: &Discretization, solver: &BvpSolver, lambda: C64, x_prev: &[C64]) -> Vec<C64> {
    let rhs: Vec<C64> = level.forms.b.mul_vec(x_prev).into_iter().map(|v| lambda * v).collect();
    solver.solve(&rhs, false)
}

/// Dual problem `A^T y = conj(lambda) B^T y_prev`.
pub fn bvp_solve_dual(level: &Discretization, solver: &BvpSolver, lambda: C64, y_prev: &[C64]) -> Vec<C64> {
    let rhs: Vec<C64> = level
        .forms
        .b
        .tr_mul_vec(y_prev, false)
        .into_iter()
        .map(|v| lambda.conj() * v)
        .collect();
    solver.solve(&rhs, true)
}

/// One correction step from `state` (level `m`) to level `m + 1`.
pub fn correction_step(hier: &Hierarchy, state: &LevelState, solver: &ReducedSolver) -> Result<LevelState> {
    let start = Instant::now();
    let m = state.level;
    let fine = hier.level(m + 1);
    let pp = product_prolongation(hier.step(m));
    let bvp = BvpSolver::new(fine)?;
    let mut raw = Vec::with_capacity(2 * state.pairs.len());
    for (j, &lam) in state.pairs.values.iter().enumerate() {
        raw.push(bvp_solve(fine, &bvp, lam, &pp.mul_vec(&state.pairs.right[j])));
    }
    for (j, &lam) in state.pairs.values.iter().enumerate() {
        raw.push(bvp_solve_dual(fine, &bvp, lam, &pp.mul_vec(&state.pairs.left[j])));
    }
    let coarse = CoarseRestriction::new(hier.from_coarsest(m + 1), &fine.forms.blocks, &hier.level(1).layout)?;
    let sol = enriched_solve(&fine.layout, &fine.forms.blocks, &coarse, &raw, &state.pairs.values, solver)?;
    let biorthogonality = quasi_biorthogonality(&sol.pairs, &fine.forms.a);
    Ok(LevelState {
        level: m + 1,
        h: fine.h(),
        pairs: sol.pairs,
        biorthogonality,
        seconds: start.elapsed().as_secs_f64(),
        reduced_dim: sol.reduced_dim,
        galerkin_residual: sol.galerkin_residual,
    })
}

/// Levels computed by a run; `error` is set when a level failed, in which
/// case `levels` holds everything before it.
pub struct MultigridRun {
    pub levels: Vec<LevelState>,
    pub error: Option<Error>,
}

/// Direct solve on level 1 followed by `levels - 1` correction steps.
pub fn run_multigrid(config: &MultigridConfig) -> MultigridRun {
    let mut levels = Vec::new();
    let error = run_into(config, &mut levels).err();
    MultigridRun { levels, error }
}

fn run_into(config: &MultigridConfig, out: &mut Vec<LevelState>) -> Result<()> {
    if config.levels < 1 || config.q < 1 {
        return Err(Error::Config("levels and q must be at least 1".into()));
    }
    let start = Instant::now();
    let mut hier = Hierarchy::new(config.domain, config.coarse_divisions, config.refraction, config.quad_order)?;
    let opts = ArnoldiOptions {
        q: config.q,
        ..config.arnoldi
    };
    let mut state = coarse_solve(hier.level(1), config.shift, &opts)?;
    state.seconds = start.elapsed().as_secs_f64();
    out.push(state);
    let solver = config.reduced_solver();
    for _ in 1..config.levels {
        let start = Instant::now();
        hier.refine()?;
        let mut next = correction_step(&hier, out.last().unwrap(), &solver)?;
        next.seconds = start.elapsed().as_secs_f64();
        out.push(next);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::c64;

    #[test]
    fn bvp_zero_in_zero_out() {
        let h = Hierarchy::new(Domain::UnitSquare, 4, RefractionField::Constant(16.0), 5).unwrap();
        let l = h.level(1);
        let s = BvpSolver::new(l).unwrap();
        let z = vec![C64::default(); l.dim()];
        assert!(bvp_solve(l, &s, c64(3.0, 0.0), &z).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn bvp_real_in_real_out() {
        let h = Hierarchy::new(Domain::UnitSquare, 4, RefractionField::Constant(16.0), 5).unwrap();
        let l = h.level(1);
        let s = BvpSolver::new(l).unwrap();
        let x: Vec<C64> = (0..l.dim()).map(|i| c64((i as f64).sin(), 0.0)).collect();
        assert!(bvp_solve(l, &s, c64(3.0, 0.0), &x).iter().all(|v| v.im == 0.0));
        assert!(bvp_solve_dual(l, &s, c64(3.0, 0.0), &x).iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn biorthogonality_of_identity_pairs() {
        let a = CsrMatrix::<f64>::identity(3);
        let e = |i: usize| (0..3).map(|k| c64(if k == i { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>();
        let pairs = EigenPairSet {
            values: vec![c64(1.0, 0.0), c64(2.0, 0.0)],
            right: vec![e(0), e(1)],
            left: vec![e(0), e(1)],
            ..Default::default()
        };
        let r = quasi_biorthogonality(&pairs, &a);
        assert_eq!(r.min_diagonal, 1.0);
        assert_eq!(r.max_off_diagonal, 0.0);
        assert!(!r.violated);
        let single = pairs.select(&[0]);
        let r = quasi_biorthogonality(&single, &a);
        assert_eq!(r.max_off_diagonal, 0.0);
        assert_eq!(r.gram.nrows(), 1);
    }
}
