//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Reference values are the published tables for this scheme.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tev::assembly::{assemble_blocks, RefractionField};
use tev::bfs::{build_space, element_eval, product_prolongation, Deriv, FeSpace, CONSTRAINED};
use tev::linalg::dense::DenseMatrix;
use tev::linalg::scalar::c64;
use tev::linalg::{a_normalize, ArnoldiOptions, CsrMatrix, DensePencil};
use tev::mesh::{build_mesh, Domain};
use tev::multigrid::{coarse_solve, run_multigrid, Hierarchy, LevelState, MultigridConfig, DEFAULT_DENSE_LIMIT};
use tev::report::{principal_sqrt, ReportBundle};
use tev::Complex64 as C64;

struct Ledger {
    failed: usize,
}

impl Ledger {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn run(domain: Domain, n: RefractionField, div: usize, levels: usize, q: usize, shift: C64) -> (Vec<LevelState>, f64) {
    let cfg = MultigridConfig {
        domain,
        refraction: n,
        coarse_divisions: div,
        levels,
        q,
        shift,
        quad_order: 5,
        arnoldi: ArnoldiOptions::new(q),
        dense_limit: DEFAULT_DENSE_LIMIT,
    };
    let start = Instant::now();
    let out = run_multigrid(&cfg);
    if let Some(e) = out.error {
        panic!("multigrid run on {domain} with n = {n} failed: {e}");
    }
    (out.levels, start.elapsed().as_secs_f64())
}

fn ks(state: &LevelState) -> Vec<C64> {
    state.pairs.values.iter().map(|&l| principal_sqrt(l)).collect()
}

/// Computed `k` nearest to `target`.
fn nearest(state: &LevelState, target: C64) -> C64 {
    ks(state)
        .into_iter()
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
        .expect("level has eigenvalues")
}

const SQUARE16_K1: [f64; 4] = [1.880051827, 1.879621633, 1.879593109, 1.879591295];
const SQUARE16_K23: [f64; 4] = [2.446255515, 2.444371226, 2.444244719, 2.444236640];
const SQUARE16_K4: [f64; 4] = [2.868193148, 2.866560541, 2.866446979, 2.866439605];

fn criterion_1(l: &mut Ledger, levels: &[LevelState], secs: f64) {
    let mut worst1: f64 = 0.0;
    let mut worst_rest: f64 = 0.0;
    for (m, state) in levels.iter().enumerate() {
        let k = ks(state);
        worst1 = worst1.max(rel(k[0], c64(SQUARE16_K1[m], 0.0)));
        for j in [1, 2] {
            worst_rest = worst_rest.max(rel(k[j], c64(SQUARE16_K23[m], 0.0)));
        }
        worst_rest = worst_rest.max(rel(k[3], c64(SQUARE16_K4[m], 0.0)));
    }
    l.record(
        "1",
        levels.len() == 4 && worst1 <= 1e-5 && worst_rest <= 1e-4,
        format!("square n=16, levels 1-4: max rel err k1 {worst1:.2e} (tol 1e-5), k2-k4 {worst_rest:.2e} (tol 1e-4), {secs:.1} s"),
    );
}

fn criterion_2(l: &mut Ledger, levels: &[LevelState]) {
    let last = levels.last().unwrap();
    let target = c64(4.271696373, 1.147433642);
    let up = nearest(last, target);
    let down = nearest(last, target.conj());
    let (er, ei) = ((up.re - target.re).abs() / target.re, (up.im - target.im).abs() / target.im);
    let lam_up = up * up;
    let conj_gap = (lam_up.conj() - down * down).norm() / lam_up.norm();
    l.record(
        "2",
        er <= 1e-4 && ei <= 1e-4 && conj_gap <= 1e-8 && up.im > 0.0 && down.im < 0.0,
        format!("n=4 pair at h=sqrt2/64: {up:.9}, rel err re {er:.2e} im {ei:.2e} (tol 1e-4), conjugate gap {conj_gap:.1e} (tol 1e-8)"),
    );
}

fn criterion_3(l: &mut Ledger, real: &[LevelState], pair: &[LevelState]) {
    let k1 = nearest(&real[2], c64(2.822194508, 0.0));
    let e1 = rel(k1, c64(2.822194508, 0.0));
    let target = c64(4.4965518150, 0.8714987351);
    let kp = nearest(&pair[2], target);
    let km = nearest(&pair[2], target.conj());
    let ep = rel(kp, target).max(rel(km, target.conj()));
    l.record(
        "3",
        e1 <= 1e-4 && ep <= 1e-3,
        format!("n=8+x1-x2 at h=sqrt2/32: k1 {k1:.9} rel err {e1:.2e} (tol 1e-4), pair {kp:.9} rel err {ep:.2e} (tol 1e-3)"),
    );
}

fn criterion_4(l: &mut Ledger, levels: &[LevelState]) {
    let k = ks(&levels[3]);
    let e1 = rel(k[0], c64(1.4770116, 0.0));
    let e2 = rel(k[1], c64(1.5697385, 0.0));
    l.record(
        "4",
        e1 <= 1e-4 && e2 <= 1e-4,
        format!("L-shape n=16 at h=sqrt2/64: k1 {:.7} rel err {e1:.2e}, k2 {:.7} rel err {e2:.2e} (tol 1e-4)", k[0].re, k[1].re),
    );
}

fn criterion_5(l: &mut Ledger, square: &[LevelState], lshape: &[LevelState]) {
    let slope = |levels: &[LevelState]| {
        let b = ReportBundle::from_levels(levels, None, false);
        b.orders.iter().find(|o| o.0 == 1).map(|o| o.1).unwrap_or(f64::NAN)
    };
    let (s, t) = (slope(square), slope(lshape));
    l.record(
        "5",
        (3.7..=4.3).contains(&s) && t < 2.0,
        format!("k1 order: square {s:.3} (want [3.7, 4.3]), L-shape {t:.3} (want < 2)"),
    );
}

fn criterion_6(l: &mut Ledger, levels: &[LevelState], multigrid_secs: f64) {
    let mut hier = Hierarchy::new(Domain::UnitSquare, 8, RefractionField::Constant(16.0), 5).unwrap();
    let opts = ArnoldiOptions::new(4);
    let mut worst: f64 = 0.0;
    let mut direct_secs = 0.0;
    for (m, state) in levels.iter().enumerate().take(4) {
        if m > 0 {
            hier.refine().unwrap();
        }
        let start = Instant::now();
        let direct = coarse_solve(hier.level(m + 1), c64(3.0, 0.0), &opts).unwrap();
        direct_secs = start.elapsed().as_secs_f64();
        for k in ks(state) {
            worst = worst.max(rel(k, nearest(&direct, k)));
        }
    }
    l.record(
        "6",
        worst <= 1e-5,
        format!(
            "multigrid vs direct, levels 1-4: max rel diff {worst:.2e} (tol 1e-5); timing (logged only): multigrid {multigrid_secs:.2} s, direct fine solve {direct_secs:.2} s"
        ),
    );
}

fn dense(m: &CsrMatrix<f64>) -> DenseMatrix {
    let rows = m.to_dense();
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| c64(rows[i][j], 0.0))
}

fn sorted(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    v
}

fn criterion_7(l: &mut Ledger) {
    let hier = Hierarchy::new(Domain::UnitSquare, 4, RefractionField::Constant(16.0), 5).unwrap();
    let level = hier.level(1);
    let sigma = c64(3.0, 0.0);
    let sparse = coarse_solve(level, sigma, &ArnoldiOptions::new(4)).unwrap();
    let pencil = DensePencil::new(&dense(&level.forms.a), &dense(&level.forms.b)).unwrap();
    let mut all = pencil.eigenvalues();
    all.sort_by(|a, b| (a - sigma).norm().total_cmp(&(b - sigma).norm()));
    let brute = sorted(all[..4].to_vec());
    let got = sorted(sparse.pairs.values.clone());
    let primal = got.len() == 4 && got.iter().zip(&brute).all(|(a, b)| rel(*a, *b) <= 1e-8);
    let worst = got.iter().zip(&brute).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let dual = sorted(sparse.pairs.dual_values.iter().map(|v| v.conj()).collect());
    let dual_gap = got.iter().zip(&dual).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    l.record(
        "7",
        primal && dual.len() == got.len() && dual_gap <= 1e-8,
        format!("(UnitSquare,4) n=16 sigma=3: Arnoldi vs dense max rel diff {worst:.1e}, primal vs conj(dual) {dual_gap:.1e} (tol 1e-8)"),
    );
}

/// Gauss-Legendre nodes on [0, 1] by Newton iteration on `P_n`.
fn gauss_nodes(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            ((1.0 - x) / 2.0, w / 2.0)
        })
        .collect()
}

/// Dense `A` and `B` from the weak forms, integrated cell by cell with an
/// order-10 tensor rule.
fn oracle_pencil(space: &FeSpace, a: f64, b1: f64, b2: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = space.n_free();
    let mut am = vec![vec![0.0; 2 * n]; 2 * n];
    let mut bm = vec![vec![0.0; 2 * n]; 2 * n];
    let mesh = space.mesh();
    let side = mesh.cell_side();
    let rule = gauss_nodes(10);
    for cell in 0..mesh.n_cells() {
        let o = mesh.cell_origin(cell);
        let dofs = space.cell_dofs(cell);
        for &(s, ws) in &rule {
            for &(t, wt) in &rule {
                let (x, y) = (o[0] + s * side, o[1] + t * side);
                let w = ws * wt * side * side;
                let nv = a + b1 * x + b2 * y;
                let c1 = 1.0 / (nv - 1.0);
                let c2 = nv / (nv - 1.0);
                // both coefficients have gradient -grad(n) / (n - 1)^2
                let g = [-b1 * c1 * c1, -b2 * c1 * c1];
                let f = |l: usize, d: Deriv| element_eval(side, l, [s, t], d);
                for li in 0..16 {
                    let i = dofs[li];
                    if i == CONSTRAINED {
                        continue;
                    }
                    let (vi, vx, vy) = (f(li, Deriv::Val), f(li, Deriv::Dx), f(li, Deriv::Dy));
                    let lap_i = f(li, Deriv::Dxx) + f(li, Deriv::Dyy);
                    for lj in 0..16 {
                        let j = dofs[lj];
                        if j == CONSTRAINED {
                            continue;
                        }
                        let (uj, ux, uy) = (f(lj, Deriv::Val), f(lj, Deriv::Dx), f(lj, Deriv::Dy));
                        let lap_j = f(lj, Deriv::Dxx) + f(lj, Deriv::Dyy);
                        // grad(c1 u) . grad v + grad u . grad(c2 v)
                        let first = (c1 * ux + g[0] * uj) * vx + (c1 * uy + g[1] * uj) * vy;
                        let second = ux * (c2 * vx + g[0] * vi) + uy * (c2 * vy + g[1] * vi);
                        am[i][j] += w * c1 * lap_j * lap_i;
                        am[n + i][n + j] += w * uj * vi;
                        bm[i][j] += w * (first + second);
                        bm[i][n + j] -= w * c2 * uj * vi;
                        bm[n + i][j] += w * uj * vi;
                    }
                }
            }
        }
    }
    (am, bm)
}

fn frob_rel(m: &CsrMatrix<f64>, oracle: &[Vec<f64>]) -> f64 {
    let d = m.to_dense();
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, o) in d.iter().zip(oracle) {
        for (a, b) in r.iter().zip(o) {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    (num / den).sqrt()
}

/// Value and first derivatives of the FE function inside one given cell.
fn eval_in(space: &FeSpace, c: &[f64], cell: usize, p: [f64; 2], d: Deriv) -> f64 {
    let mesh = space.mesh();
    let o = mesh.cell_origin(cell);
    let side = mesh.cell_side();
    let local = [(p[0] - o[0]) / side, (p[1] - o[1]) / side];
    space
        .cell_dofs(cell)
        .iter()
        .enumerate()
        .filter(|(_, &g)| g != CONSTRAINED)
        .map(|(l, &g)| c[g] * element_eval(side, l, local, d))
        .sum()
}

fn c1_continuity(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for domain in [Domain::UnitSquare, Domain::LShape] {
        let space = build_space(Arc::new(build_mesh(domain, 4)));
        let mesh = space.mesh().clone();
        let c: Vec<f64> = (0..space.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for cell in 0..mesh.n_cells() {
            let [ci, cj] = mesh.grid_cell(cell);
            let o = mesh.cell_origin(cell);
            let side = mesh.cell_side();
            let neighbours = [(mesh.cell_at(ci + 1, cj), 0), (mesh.cell_at(ci, cj + 1), 1)];
            for (nb, axis) in neighbours {
                let Some(nb) = nb else { continue };
                for _ in 0..5 {
                    let t = rng.gen::<f64>();
                    let p = if axis == 0 { [o[0] + side, o[1] + t * side] } else { [o[0] + t * side, o[1] + side] };
                    for d in [Deriv::Val, Deriv::Dx, Deriv::Dy] {
                        worst = worst.max((eval_in(&space, &c, cell, p, d) - eval_in(&space, &c, nb, p, d)).abs());
                    }
                }
            }
        }
    }
    worst
}

fn bicubic_reproduction(rng: &mut ChaCha8Rng) -> f64 {
    let coef: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // p = sum a_ij x^i y^j and its partial derivatives
    let pow = |x: f64, i: i32, d: i32| -> f64 {
        if i < d {
            return 0.0;
        }
        let f: f64 = (0..d).map(|k| (i - k) as f64).product();
        f * x.powi(i - d)
    };
    let p = |x: f64, y: f64, dx: i32, dy: i32| -> f64 {
        (0..16).map(|k| coef[k] * pow(x, (k % 4) as i32, dx) * pow(y, (k / 4) as i32, dy)).sum()
    };
    let space = build_space(Arc::new(build_mesh(Domain::LShape, 4)));
    let mesh = space.mesh().clone();
    let c = space.interpolate(|x, y| [p(x, y, 0, 0), p(x, y, 1, 0), p(x, y, 0, 1), p(x, y, 1, 1)]);
    let mut worst: f64 = 0.0;
    for cell in 0..mesh.n_cells() {
        // cells touching the boundary carry clamped data
        if mesh.cells()[cell].iter().any(|&nd| mesh.is_boundary(nd)) {
            continue;
        }
        let o = mesh.cell_origin(cell);
        let side = mesh.cell_side();
        for _ in 0..4 {
            let pt = [o[0] + rng.gen::<f64>() * side, o[1] + rng.gen::<f64>() * side];
            for (d, (dx, dy)) in [
                (Deriv::Val, (0, 0)),
                (Deriv::Dx, (1, 0)),
                (Deriv::Dy, (0, 1)),
                (Deriv::Dxx, (2, 0)),
                (Deriv::Dyy, (0, 2)),
                (Deriv::Dxy, (1, 1)),
            ] {
                worst = worst.max((eval_in(&space, &c, cell, pt, d) - p(pt[0], pt[1], dx, dy)).abs());
            }
        }
    }
    worst
}

fn criterion_8(l: &mut Ledger, runs: &[&[LevelState]]) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    // Galerkin identity between levels for constant n
    let mut hier = Hierarchy::new(Domain::LShape, 4, RefractionField::Constant(16.0), 5).unwrap();
    hier.refine().unwrap();
    let p = product_prolongation(hier.step(1));
    let pt = p.transpose();
    let (coarse, fine) = (&hier.level(1).forms, &hier.level(2).forms);
    let ga = pt.matmul(&fine.a).matmul(&p).linear_combination(1.0, &coarse.a, -1.0).frobenius_norm() / coarse.a.frobenius_norm();
    let gb = pt.matmul(&fine.b).matmul(&p).linear_combination(1.0, &coarse.b, -1.0).frobenius_norm() / coarse.b.frobenius_norm();

    let cont = c1_continuity(&mut rng);
    let repro = bicubic_reproduction(&mut rng);

    // B (and A) against the order-10 oracle for affine n
    let space = build_space(Arc::new(build_mesh(Domain::UnitSquare, 4)));
    let (ao, bo) = oracle_pencil(&space, 8.0, 1.0, -1.0);
    let blocks = assemble_blocks(&space, &RefractionField::Affine { a: 8.0, b1: 1.0, b2: -1.0 }, 5).unwrap();
    let eb = frob_rel(&blocks.product_b(), &bo);
    let ea = frob_rel(&blocks.product_a(), &ao);

    // a_normalize invariance under scaling and phase
    let hier4 = Hierarchy::new(Domain::UnitSquare, 4, RefractionField::Constant(16.0), 5).unwrap();
    let lvl = hier4.level(1);
    let pairs = coarse_solve(lvl, c64(3.0, 0.0), &ArnoldiOptions::new(4)).unwrap().pairs;
    let mut inv: f64 = 0.0;
    for x in &pairs.right {
        let base = a_normalize(x, &lvl.forms.a).unwrap();
        for alpha in [c64(1e-6, 0.0), C64::from_polar(3.7e4, 2.1), C64::from_polar(0.3, -0.9)] {
            let y: Vec<C64> = x.iter().map(|v| alpha * v).collect();
            let z = a_normalize(&y, &lvl.forms.a).unwrap();
            inv = inv.max(z.iter().zip(&base).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
    }

    let quasi = runs
        .iter()
        .flat_map(|r| r.iter())
        .map(|s| s.biorthogonality.min_diagonal)
        .fold(f64::INFINITY, f64::min);

    let pass = ga <= 1e-10 && gb <= 1e-10 && cont <= 1e-12 && repro <= 1e-12 && eb <= 1e-10 && ea <= 1e-10 && inv <= 1e-12 && quasi > 1e-3;
    l.record(
        "8",
        pass,
        format!(
            "Galerkin A {ga:.1e} B {gb:.1e} (tol 1e-10); C1 jump {cont:.1e}, bicubic {repro:.1e} (tol 1e-12); \
             order-10 oracle B {eb:.1e} A {ea:.1e} (tol 1e-10); a_normalize {inv:.1e} (tol 1e-12); \
             min quasi-biorthogonality {quasi:.3} (want > 1e-3)"
        ),
    );
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--list`; there are no named tests to list
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut l = Ledger { failed: 0 };
    let n16 = RefractionField::Constant(16.0);
    let affine = RefractionField::Affine { a: 8.0, b1: 1.0, b2: -1.0 };

    let (square, square_secs) = run(Domain::UnitSquare, n16, 8, 4, 4, c64(3.0, 0.0));
    criterion_1(&mut l, &square, square_secs);
    let (n4, _) = run(Domain::UnitSquare, RefractionField::Constant(4.0), 16, 3, 2, c64(17.0, 10.0));
    criterion_2(&mut l, &n4);
    let (aff_real, _) = run(Domain::UnitSquare, affine, 8, 3, 1, c64(8.0, 0.0));
    let (aff_pair, _) = run(Domain::UnitSquare, affine, 8, 3, 2, c64(19.46, 7.84));
    criterion_3(&mut l, &aff_real, &aff_pair);
    let (lshape, _) = run(Domain::LShape, n16, 8, 4, 4, c64(2.0, 0.0));
    criterion_4(&mut l, &lshape);
    criterion_5(&mut l, &square, &lshape);
    criterion_6(&mut l, &square, square_secs);
    criterion_7(&mut l);
    criterion_8(&mut l, &[&square, &n4, &aff_real, &aff_pair, &lshape]);

    println!("acceptance: {} of 8 criteria passed", 8 - l.failed);
    if l.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
