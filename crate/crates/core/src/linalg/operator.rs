use super::dense::DenseMatrix;
use super::scalar::{Scalar, C64};
use super::sparse::CsrMatrix;

/// Anything that can multiply complex vectors and their adjoint.
pub trait LinearMap {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
}

impl<T: Scalar> LinearMap for CsrMatrix<T>
where
    C64: From<T>,
{
    fn nrows(&self) -> usize {
        CsrMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        CsrMatrix::ncols(self)
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.tr_mul_vec(x, true)
    }
}

impl LinearMap for DenseMatrix {
    fn nrows(&self) -> usize {
        DenseMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        DenseMatrix::ncols(self)
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.mul_vec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.adjoint_mul_vec(x)
    }
}

impl<M: LinearMap + ?Sized> LinearMap for &M {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        (**self).apply_adjoint(x)
    }
}
