//! Sparse and dense linear algebra used by the eigensolvers.

pub mod arnoldi;
pub mod dense;
pub mod eigpairs;
pub mod lu;
pub mod operator;
pub mod pencil;
pub mod scalar;
pub mod sparse;

pub use arnoldi::{arnoldi_shift_invert, ArnoldiOptions, ShiftInvert, ShiftedLu, SparsePencil};
pub use dense::DenseMatrix;
pub use eigpairs::{a_normalize, EigenPairSet};
pub use lu::{sparse_lu, SparseLu};
pub use operator::LinearMap;
pub use pencil::{dense_pencil_eig, DensePencil};
pub use scalar::{Scalar, C64};
pub use sparse::CsrMatrix;
