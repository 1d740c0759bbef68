use super::dense::{DenseLu, DenseMatrix};
use super::operator::LinearMap;
use super::scalar::{axpy, c64, dot, norm2, C64};
use crate::{Error, Result};

/// Eigenvalues with A-normalized right and left vectors.
///
/// Right vectors satisfy `A x = lambda B x`, left vectors
/// `A^H y = conj(lambda) B^H y`. `dual_values` holds the eigenvalues found
/// by the independent dual computation, i.e. the conjugates of the primal
/// ones up to solver tolerance. Residuals are relative:
/// `|A x - lambda B x| / |A x|` and `|A^H y - conj(lambda) B^H y| / |A^H y|`.
#[derive(Debug, Clone, Default)]
pub struct EigenPairSet {
    pub values: Vec<C64>,
    pub dual_values: Vec<C64>,
    pub right: Vec<Vec<C64>>,
    pub left: Vec<Vec<C64>>,
    pub right_residuals: Vec<f64>,
    pub left_residuals: Vec<f64>,
}

/// Scales `x` to unit A-norm and rotates it so that its largest entry is
/// real and positive.
pub fn a_normalize<M: LinearMap>(x: &[C64], a: &M) -> Result<Vec<C64>> {
    let s = dot(x, &a.apply(x)).re;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NotPositiveDefinite { pivot: 0, value: s });
    }
    let mut out: Vec<C64> = x.iter().map(|v| v / s.sqrt()).collect();
    fix_phase(&mut out);
    Ok(out)
}

/// Makes the first entry of (numerically) largest modulus real positive.
pub fn fix_phase(x: &mut [C64]) {
    let max = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let p = x.iter().position(|v| v.norm() >= max * (1.0 - 1e-10)).unwrap();
    let rot = x[p].conj() / x[p].norm();
    x.iter_mut().for_each(|v| *v *= rot);
    x[p] = c64(x[p].re, 0.0);
}

fn a_inner<M: LinearMap>(a: &M, x: &[C64], y: &[C64]) -> C64 {
    dot(x, &a.apply(y))
}

/// Indices grouped into clusters of values closer than `tol` relative.
fn clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if seen[i] {
            continue;
        }
        let mut c = vec![i];
        seen[i] = true;
        let mut k = 0;
        while k < c.len() {
            let v = values[c[k]];
            for j in 0..values.len() {
                if !seen[j] && (values[j] - v).norm() <= tol * v.norm().max(values[j].norm()) {
                    seen[j] = true;
                    c.push(j);
                }
            }
            k += 1;
        }
        c.sort_unstable();
        out.push(c);
    }
    out
}

/// A-orthonormal real basis of the span of the real and imaginary parts of
/// `vectors`, dropping directions below `drop` relative to the largest.
fn real_basis<M: LinearMap>(a: &M, vectors: &[&Vec<C64>], drop: f64) -> Vec<Vec<C64>> {
    let mut cand: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        cand.push(v.iter().map(|z| c64(z.re, 0.0)).collect());
        cand.push(v.iter().map(|z| c64(z.im, 0.0)).collect());
    }
    let scale = cand.iter().map(|c| a_inner(a, c, c).re.max(0.0).sqrt()).fold(0.0, f64::max);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut c in cand {
        for _ in 0..2 {
            for b in &basis {
                let h = a_inner(a, b, &c);
                axpy(-h, b, &mut c);
            }
        }
        let nrm = a_inner(a, &c, &c).re.max(0.0).sqrt();
        if nrm > drop * scale {
            c.iter_mut().for_each(|z| *z = c64(z.re / nrm, 0.0));
            basis.push(c);
        }
    }
    basis
}

impl EigenPairSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the pairs at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> EigenPairSet {
        fn pick<T: Clone>(v: &[T], indices: &[usize]) -> Vec<T> {
            if v.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| v[i].clone()).collect()
            }
        }
        EigenPairSet {
            values: pick(&self.values, indices),
            dual_values: pick(&self.dual_values, indices),
            right: pick(&self.right, indices),
            left: pick(&self.left, indices),
            right_residuals: pick(&self.right_residuals, indices),
            left_residuals: pick(&self.left_residuals, indices),
        }
    }

    /// Orders pairs by ascending modulus, then ascending imaginary part.
    pub fn sort_by_magnitude(&mut self) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| {
            let (a, b) = (self.values[i], self.values[j]);
            let (ma, mb) = (a.norm(), b.norm());
            if (ma - mb).abs() <= 1e-12 * ma.max(mb) {
                a.im.partial_cmp(&b.im).unwrap()
            } else {
                ma.partial_cmp(&mb).unwrap()
            }
        });
        *self = self.select(&idx);
    }

    /// A-normalizes all vectors with the phase convention of [`a_normalize`].
    pub fn normalize<M: LinearMap>(&mut self, a: &M) -> Result<()> {
        for x in self.right.iter_mut().chain(self.left.iter_mut()) {
            *x = a_normalize(x, a)?;
        }
        Ok(())
    }

    pub fn compute_residuals<MA: LinearMap, MB: LinearMap>(&mut self, a: &MA, b: &MB) {
        let rel = |r: Vec<C64>, ax: &[C64]| norm2(&r) / norm2(ax).max(f64::MIN_POSITIVE);
        self.right_residuals = self
            .values
            .iter()
            .zip(&self.right)
            .map(|(&lam, x)| {
                let ax = a.apply(x);
                let bx = b.apply(x);
                let r = ax.iter().zip(&bx).map(|(p, q)| p - lam * q).collect();
                rel(r, &ax)
            })
            .collect();
        self.left_residuals = self
            .values
            .iter()
            .zip(&self.left)
            .map(|(&lam, y)| {
                let ay = a.apply_adjoint(y);
                let by = b.apply_adjoint(y);
                let r = ay.iter().zip(&by).map(|(p, q)| p - lam.conj() * q).collect();
                rel(r, &ay)
            })
            .collect();
    }

    /// For a real pencil: snaps numerically real eigenvalues onto the real
    /// axis and replaces their vectors by a real basis of the same
    /// eigenspace (cluster-wise, so multiple eigenvalues keep independent
    /// vectors).
    pub fn make_real<M: LinearMap>(&mut self, a: &M, real_tol: f64, cluster_tol: f64) {
        let real: Vec<usize> = (0..self.len())
            .filter(|&i| self.values[i].im.abs() <= real_tol * self.values[i].norm())
            .collect();
        let vals: Vec<C64> = real.iter().map(|&i| self.values[i]).collect();
        for group in clusters(&vals, cluster_tol) {
            let members: Vec<usize> = group.iter().map(|&g| real[g]).collect();
            for side in 0..2 {
                let vecs = if side == 0 { &self.right } else { &self.left };
                if vecs.is_empty() {
                    continue;
                }
                let refs: Vec<&Vec<C64>> = members.iter().map(|&i| &vecs[i]).collect();
                let basis = real_basis(a, &refs, 1e-6);
                if basis.len() < members.len() {
                    continue;
                }
                let vecs = if side == 0 { &mut self.right } else { &mut self.left };
                for (k, &i) in members.iter().enumerate() {
                    vecs[i] = basis[k].clone();
                }
            }
            for &i in &members {
                self.values[i] = c64(self.values[i].re, 0.0);
                if let Some(d) = self.dual_values.get_mut(i) {
                    *d = c64(d.re, 0.0);
                }
            }
        }
    }

    /// Within every cluster of (numerically) equal eigenvalues, recombines
    /// the left vectors so that `y_l^H A x_j = 0` for `l != j`.
    pub fn biorthogonalize<M: LinearMap>(&mut self, a: &M, cluster_tol: f64) -> Result<()> {
        for group in clusters(&self.values, cluster_tol) {
            if group.len() < 2 || self.left.is_empty() {
                continue;
            }
            let c = group.len();
            let ax: Vec<Vec<C64>> = group.iter().map(|&j| a.apply(&self.right[j])).collect();
            // m[l][j] = y_l^H A x_j
            let m = DenseMatrix::from_fn(c, c, |l, j| dot(&self.left[group[l]], &ax[j]));
            let lu = DenseLu::factor(&m.adjoint(), false)?;
            // Y' = Y M^{-H}
            let mut coeff = Vec::with_capacity(c);
            for l in 0..c {
                let mut e = vec![C64::default(); c];
                e[l] = c64(1.0, 0.0);
                coeff.push(lu.solve(&e));
            }
            let old: Vec<Vec<C64>> = group.iter().map(|&l| self.left[l].clone()).collect();
            for (l, &gl) in group.iter().enumerate() {
                let mut y = vec![C64::default(); old[0].len()];
                for k in 0..c {
                    axpy(coeff[l][k], &old[k], &mut y);
                }
                self.left[gl] = a_normalize(&y, a)?;
            }
        }
        Ok(())
    }

    /// Adds the conjugate partner of every complex eigenvalue that lacks one
    /// (valid for real pencils only).
    pub fn close_under_conjugation(&mut self, real_tol: f64, pair_tol: f64) {
        let n = self.len();
        for i in 0..n {
            let v = self.values[i];
            if v.im.abs() <= real_tol * v.norm() {
                continue;
            }
            let has = self.values.iter().any(|w| (w - v.conj()).norm() <= pair_tol * v.norm());
            if has {
                continue;
            }
            let conj = |x: &Vec<C64>| x.iter().map(|z| z.conj()).collect::<Vec<_>>();
            self.values.push(v.conj());
            if let Some(&d) = self.dual_values.get(i) {
                self.dual_values.push(d.conj());
            }
            let r = conj(&self.right[i]);
            self.right.push(r);
            if !self.left.is_empty() {
                let l = conj(&self.left[i]);
                self.left.push(l);
            }
            if let Some(&r) = self.right_residuals.get(i) {
                self.right_residuals.push(r);
            }
            if let Some(&r) = self.left_residuals.get(i) {
                self.left_residuals.push(r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spd() -> CsrMatrix<f64> {
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    fn random_vec(seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..20).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn max_diff(x: &[C64], y: &[C64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn normalized_vector_has_unit_a_norm() {
        let a = spd();
        let x = a_normalize(&random_vec(1), &a).unwrap();
        assert!((a_inner(&a, &x, &x).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_real_vector_unchanged() {
        let a = spd();
        let x: Vec<C64> = random_vec(2).iter().map(|z| c64(z.re, 0.0)).collect();
        let x = a_normalize(&x, &a).unwrap();
        assert!(max_diff(&a_normalize(&x, &a).unwrap(), &x) <= 1e-12);
    }

    #[test]
    fn scale_and_phase_invariance() {
        let a = spd();
        let x = random_vec(3);
        let base = a_normalize(&x, &a).unwrap();
        let twice: Vec<C64> = x.iter().map(|z| z * 2.0).collect();
        assert!(max_diff(&a_normalize(&twice, &a).unwrap(), &base) <= 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rot: Vec<C64> = x.iter().map(|z| z * C64::from_polar(1.0, th)).collect();
            assert!(max_diff(&a_normalize(&rot, &a).unwrap(), &base) <= 1e-12);
        }
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(a_normalize(&[C64::default(); 20], &spd()).is_err());
    }

    #[test]
    fn conjugate_closure_adds_missing_partner() {
        let mut s = EigenPairSet {
            values: vec![c64(2.0, 1.0), c64(3.0, 0.0)],
            right: vec![vec![c64(1.0, 1.0)], vec![c64(1.0, 0.0)]],
            ..Default::default()
        };
        s.close_under_conjugation(1e-12, 1e-8);
        assert_eq!(s.len(), 3);
        assert_eq!(s.values[2], c64(2.0, -1.0));
        assert_eq!(s.right[2], vec![c64(1.0, -1.0)]);
        s.close_under_conjugation(1e-12, 1e-8);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn sort_orders_conjugates_by_imaginary_part() {
        let mut s = EigenPairSet {
            values: vec![c64(2.0, 1.0), c64(1.0, 0.0), c64(2.0, -1.0)],
            ..Default::default()
        };
        s.sort_by_magnitude();
        assert_eq!(s.values, vec![c64(1.0, 0.0), c64(2.0, -1.0), c64(2.0, 1.0)]);
    }
}
