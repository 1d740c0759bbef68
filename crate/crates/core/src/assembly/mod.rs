//! Sparse matrices of the forms
//!
//! ```text
//! A((u,w),(v,z)) = (1/(n-1) Lap u, Lap v) + (w, z)
//! B((u,w),(v,z)) = (grad(u/(n-1)), grad v) + (grad u, grad(n v/(n-1))) - (n/(n-1) w, v) + (u, z)
//! ```
//!
//! on the product space. Rows index test functions, columns trial functions.
//! With real basis functions and a real index of refraction both matrices
//! are real; `A = diag(K, M)` and `B = [[G, -Mn], [M, 0]]`.

pub mod quadrature;
pub mod refraction;

pub use quadrature::gauss_rule;
pub use refraction::RefractionField;

use crate::bfs::{element_table, FeSpace, ProductLayout, CONSTRAINED};
use crate::linalg::CsrMatrix;
use crate::Result;

/// Default Gauss points per direction.
pub const DEFAULT_QUAD_ORDER: usize = 5;

const VAL: usize = 0;
const DX: usize = 1;
const DY: usize = 2;
const DXX: usize = 3;
const DYY: usize = 4;

/// Scalar blocks of the two forms on one space.
#[derive(Debug, Clone)]
pub struct FormBlocks {
    /// `K_ij = int 1/(n-1) Lap phi_j Lap phi_i`
    pub stiffness: CsrMatrix<f64>,
    /// `M_ij = int phi_j phi_i`
    pub mass: CsrMatrix<f64>,
    /// Gradient terms of `B` on the `(u, v)` block.
    pub gradient: CsrMatrix<f64>,
    /// `int n/(n-1) phi_j phi_i`
    pub weighted_mass: CsrMatrix<f64>,
}

impl FormBlocks {
    pub fn product_a(&self) -> CsrMatrix<f64> {
        let n = self.mass.nrows();
        CsrMatrix::block_2x2([[Some(&self.stiffness), None], [None, Some(&self.mass)]], ([n, n], [n, n]))
    }

    pub fn product_b(&self) -> CsrMatrix<f64> {
        let n = self.mass.nrows();
        let neg = self.weighted_mass.scaled(-1.0);
        CsrMatrix::block_2x2([[Some(&self.gradient), Some(&neg)], [Some(&self.mass), None]], ([n, n], [n, n]))
    }

    /// Galerkin restriction `P^T X P` of every block.
    pub fn restrict(&self, p: &CsrMatrix<f64>) -> FormBlocks {
        let pt = p.transpose();
        let r = |m: &CsrMatrix<f64>| pt.matmul(&m.matmul(p));
        FormBlocks {
            stiffness: r(&self.stiffness),
            mass: r(&self.mass),
            gradient: r(&self.gradient),
            weighted_mass: r(&self.weighted_mass),
        }
    }
}

/// The assembled pencil on a product space.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub a: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
    pub blocks: FormBlocks,
}

impl FormMatrices {
    pub fn from_blocks(blocks: FormBlocks) -> Self {
        FormMatrices {
            a: blocks.product_a(),
            b: blocks.product_b(),
            blocks,
        }
    }
}

/// Assembles the four scalar blocks on `space`.
pub fn assemble_blocks(space: &FeSpace, n: &RefractionField, quad_order: usize) -> Result<FormBlocks> {
    n.check_contrast(space.mesh().domain())?;
    let mesh = space.mesh();
    let side = mesh.cell_side();
    let jac = side * side;
    let rule = gauss_rule(quad_order)?;
    let tables: Vec<_> = rule.iter().map(|&(p, _)| element_table(side, p)).collect();

    let nf = space.n_free();
    let mut trip_k = Vec::new();
    let mut trip_m = Vec::new();
    let mut trip_g = Vec::new();
    let mut trip_mn = Vec::new();

    for cell in 0..mesh.n_cells() {
        let dofs = space.cell_dofs(cell);
        if dofs.iter().all(|&d| d == CONSTRAINED) {
            continue;
        }
        let origin = mesh.cell_origin(cell);
        let mut ke = [[0.0; 16]; 16];
        let mut me = [[0.0; 16]; 16];
        let mut ge = [[0.0; 16]; 16];
        let mut mne = [[0.0; 16]; 16];
        for ((p, w), t) in rule.iter().zip(&tables) {
            let x = origin[0] + side * p[0];
            let y = origin[1] + side * p[1];
            let wj = w * jac;
            let c1 = n.inv_contrast(x, y);
            let c2 = n.weighted_contrast(x, y);
            let dc = n.contrast_gradient(x, y);
            for i in 0..16 {
                let ti = &t[i];
                let lap_i = ti[DXX] + ti[DYY];
                let dci = dc[0] * ti[DX] + dc[1] * ti[DY];
                for j in 0..16 {
                    let tj = &t[j];
                    let lap_j = tj[DXX] + tj[DYY];
                    let grad = ti[DX] * tj[DX] + ti[DY] * tj[DY];
                    let dcj = dc[0] * tj[DX] + dc[1] * tj[DY];
                    let vv = ti[VAL] * tj[VAL];
                    ke[i][j] += wj * c1 * (lap_i * lap_j);
                    me[i][j] += wj * vv;
                    mne[i][j] += wj * c2 * vv;
                    ge[i][j] += wj * ((c1 + c2) * grad + tj[VAL] * dci + dcj * ti[VAL]);
                }
            }
        }
        for i in 0..16 {
            let gi = dofs[i];
            if gi == CONSTRAINED {
                continue;
            }
            for j in 0..16 {
                let gj = dofs[j];
                if gj == CONSTRAINED {
                    continue;
                }
                // symmetric blocks take the upper triangle of the element matrix
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                trip_k.push((gi, gj, ke[a][b]));
                trip_m.push((gi, gj, me[a][b]));
                trip_mn.push((gi, gj, mne[a][b]));
                trip_g.push((gi, gj, ge[i][j]));
            }
        }
    }

    Ok(FormBlocks {
        stiffness: CsrMatrix::from_triplets(nf, nf, trip_k),
        mass: CsrMatrix::from_triplets(nf, nf, trip_m),
        gradient: CsrMatrix::from_triplets(nf, nf, trip_g),
        weighted_mass: CsrMatrix::from_triplets(nf, nf, trip_mn),
    })
}

/// `A` on the product space.
pub fn assemble_a(layout: &ProductLayout, n: &RefractionField, quad_order: usize) -> Result<CsrMatrix<f64>> {
    Ok(assemble_blocks(layout.space(), n, quad_order)?.product_a())
}

/// `B` on the product space.
pub fn assemble_b(layout: &ProductLayout, n: &RefractionField, quad_order: usize) -> Result<CsrMatrix<f64>> {
    Ok(assemble_blocks(layout.space(), n, quad_order)?.product_b())
}

/// Both matrices of the pencil together with their blocks.
pub fn assemble_forms(layout: &ProductLayout, n: &RefractionField, quad_order: usize) -> Result<FormMatrices> {
    Ok(FormMatrices::from_blocks(assemble_blocks(layout.space(), n, quad_order)?))
}
