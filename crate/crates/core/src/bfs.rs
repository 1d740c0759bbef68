//! Bogner-Fox-Schmit bicubic Hermite element on square cells.
//!
//! Each node carries four degrees of freedom: the value, both first
//! derivatives and the mixed derivative `d2/dxdy`, all stored as true
//! physical derivatives. The element carries the `cell_side` scaling, so
//! transferring a function between nested meshes is a pointwise copy of its
//! Hermite data. All four DOFs of every boundary node are eliminated, which
//! realises the clamped conditions `u = du/dn = 0` on a polygonal boundary.

use std::sync::Arc;

use crate::linalg::{CsrMatrix, Scalar};
use crate::mesh::RectMesh;
use crate::{Error, Result};

/// Marker for a constrained (eliminated) degree of freedom.
pub const CONSTRAINED: usize = usize::MAX;

/// Degrees of freedom per node.
pub const DOFS_PER_NODE: usize = 4;

/// Corners of the reference square, counterclockwise from `(0, 0)`.
const CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/// Derivative selector for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Val,
    Dx,
    Dy,
    Dxx,
    Dyy,
    Dxy,
}

impl Deriv {
    pub const ALL: [Deriv; 6] = [Deriv::Val, Deriv::Dx, Deriv::Dy, Deriv::Dxx, Deriv::Dyy, Deriv::Dxy];

    fn orders(self) -> (usize, usize) {
        match self {
            Deriv::Val => (0, 0),
            Deriv::Dx => (1, 0),
            Deriv::Dy => (0, 1),
            Deriv::Dxx => (2, 0),
            Deriv::Dyy => (0, 2),
            Deriv::Dxy => (1, 1),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Cubic Hermite factors `(H0_0, H0_1, H1_0, H1_1)` on `[0, 1]` or their
/// first or second derivatives. `Ha_b` interpolates the `b`-th derivative
/// at endpoint `a`.
pub fn hermite_basis(t: f64, derivative_order: usize) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    match derivative_order {
        0 => [1.0 - 3.0 * t2 + 2.0 * t3, t - 2.0 * t2 + t3, 3.0 * t2 - 2.0 * t3, t3 - t2],
        1 => [6.0 * t2 - 6.0 * t, 1.0 - 4.0 * t + 3.0 * t2, 6.0 * t - 6.0 * t2, 3.0 * t2 - 2.0 * t],
        2 => [12.0 * t - 6.0, 6.0 * t - 4.0, 6.0 - 12.0 * t, 6.0 * t - 2.0],
        _ => [0.0; 4],
    }
}

/// Hermite factor index for a corner coordinate (0 or 1) and a DOF order.
fn factor(corner: usize, dof_order: usize) -> usize {
    2 * corner + dof_order
}

/// `(x order, y order)` of the nodal quantity for local kind 0..4.
fn kind_orders(kind: usize) -> (usize, usize) {
    match kind {
        0 => (0, 0),
        1 => (1, 0),
        2 => (0, 1),
        _ => (1, 1),
    }
}

/// Evaluates shape function `local_dof` (node `local_dof / 4`, kind
/// `local_dof % 4`) of a cell with side `side` at reference point `(xi, eta)`.
pub fn element_eval(side: f64, local_dof: usize, point: [f64; 2], deriv: Deriv) -> f64 {
    let (dx, dy) = deriv.orders();
    let hx = hermite_basis(point[0], dx);
    let hy = hermite_basis(point[1], dy);
    shape_value(side, local_dof, &hx, &hy, dx, dy)
}

fn shape_value(side: f64, local_dof: usize, hx: &[f64; 4], hy: &[f64; 4], dx: usize, dy: usize) -> f64 {
    let [cx, cy] = CORNERS[local_dof / DOFS_PER_NODE];
    let (ox, oy) = kind_orders(local_dof % DOFS_PER_NODE);
    let scale = side.powi((ox + oy) as i32 - (dx + dy) as i32);
    scale * hx[factor(cx, ox)] * hy[factor(cy, oy)]
}

/// All derivatives of all 16 shape functions at one reference point,
/// indexed `[local_dof][Deriv as usize]`.
pub fn element_table(side: f64, point: [f64; 2]) -> [[f64; 6]; 16] {
    let hx = [0, 1, 2].map(|d| hermite_basis(point[0], d));
    let hy = [0, 1, 2].map(|d| hermite_basis(point[1], d));
    let mut out = [[0.0; 6]; 16];
    for (dof, row) in out.iter_mut().enumerate() {
        for d in Deriv::ALL {
            let (dx, dy) = d.orders();
            row[d.index()] = shape_value(side, dof, &hx[dx], &hy[dy], dx, dy);
        }
    }
    out
}

/// Scalar BFS space with boundary DOFs eliminated.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<RectMesh>,
    dof_map: Vec<usize>,
    n_free: usize,
}

/// Builds the constrained BFS space on `mesh`.
pub fn build_space(mesh: Arc<RectMesh>) -> FeSpace {
    let mut dof_map = vec![CONSTRAINED; DOFS_PER_NODE * mesh.n_nodes()];
    let mut n_free = 0;
    for node in 0..mesh.n_nodes() {
        if mesh.is_boundary(node) {
            continue;
        }
        for k in 0..DOFS_PER_NODE {
            dof_map[DOFS_PER_NODE * node + k] = n_free;
            n_free += 1;
        }
    }
    FeSpace { mesh, dof_map, n_free }
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<RectMesh> {
        &self.mesh
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free index of DOF `kind` at `node`, or [`CONSTRAINED`].
    pub fn dof(&self, node: usize, kind: usize) -> usize {
        self.dof_map[DOFS_PER_NODE * node + kind]
    }

    /// Free indices of the 16 local DOFs of `cell`.
    pub fn cell_dofs(&self, cell: usize) -> [usize; 16] {
        let nodes = self.mesh.cells()[cell];
        std::array::from_fn(|l| self.dof(nodes[l / DOFS_PER_NODE], l % DOFS_PER_NODE))
    }

    /// Value or derivative of the finite element function with coefficients
    /// `coeffs` at a physical point.
    pub fn evaluate<S: Scalar>(&self, coeffs: &[S], point: [f64; 2], deriv: Deriv) -> Result<S> {
        if coeffs.len() != self.n_free {
            return Err(Error::Dimension {
                expected: self.n_free,
                got: coeffs.len(),
            });
        }
        let (cell, local) = self
            .mesh
            .locate(point[0], point[1])
            .ok_or(Error::OutsideMesh(point[0], point[1]))?;
        let side = self.mesh.cell_side();
        let mut acc = S::zero();
        for (l, &g) in self.cell_dofs(cell).iter().enumerate() {
            if g != CONSTRAINED {
                acc += coeffs[g] * S::from(element_eval(side, l, local, deriv));
            }
        }
        Ok(acc)
    }

    /// Hermite data `(u, ux, uy, uxy)` interpolation of a smooth function,
    /// restricted to the free DOFs.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> [f64; 4]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (node, p) in self.mesh.nodes().iter().enumerate() {
            let data = f(p[0], p[1]);
            for (k, v) in data.iter().enumerate() {
                let g = self.dof(node, k);
                if g != CONSTRAINED {
                    out[g] = *v;
                }
            }
        }
        out
    }

    /// Nested-dissection order of the free DOFs, built from grid lines of
    /// the mesh. The four DOFs of a node stay adjacent.
    pub fn nested_dissection(&self) -> Vec<usize> {
        let interior: Vec<(usize, [usize; 2])> = (0..self.mesh.n_nodes())
            .filter(|&n| !self.mesh.is_boundary(n))
            .map(|n| (n, self.mesh.grid_node(n)))
            .collect();
        let mut node_order = Vec::with_capacity(interior.len());
        dissect(interior, &mut node_order);
        node_order
            .into_iter()
            .flat_map(|n| (0..DOFS_PER_NODE).map(move |k| self.dof(n, k)))
            .collect()
    }
}

fn dissect(nodes: Vec<(usize, [usize; 2])>, out: &mut Vec<usize>) {
    const LEAF: usize = 16;
    if nodes.len() <= LEAF {
        out.extend(nodes.iter().map(|&(n, _)| n));
        return;
    }
    let extent = |axis: usize| {
        let lo = nodes.iter().map(|(_, g)| g[axis]).min().unwrap();
        let hi = nodes.iter().map(|(_, g)| g[axis]).max().unwrap();
        (lo, hi)
    };
    let (x0, x1) = extent(0);
    let (y0, y1) = extent(1);
    let (axis, lo, hi) = if x1 - x0 >= y1 - y0 { (0, x0, x1) } else { (1, y0, y1) };
    if hi - lo < 2 {
        out.extend(nodes.iter().map(|&(n, _)| n));
        return;
    }
    // nodes couple only within a cell, so one grid line separates the halves
    let cut = (lo + hi) / 2;
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for item in nodes {
        match item.1[axis].cmp(&cut) {
            std::cmp::Ordering::Less => left.push(item),
            std::cmp::Ordering::Greater => right.push(item),
            std::cmp::Ordering::Equal => sep.push(item),
        }
    }
    dissect(left, out);
    dissect(right, out);
    out.extend(sep.iter().map(|&(n, _)| n));
}

/// Product space `S_h x S_h`: the `u` block occupies `[0, n)`, the `w`
/// block `[n, 2n)`.
#[derive(Debug, Clone)]
pub struct ProductLayout {
    space: Arc<FeSpace>,
}

impl ProductLayout {
    pub fn new(space: Arc<FeSpace>) -> Self {
        ProductLayout { space }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn block_dim(&self) -> usize {
        self.space.n_free()
    }

    pub fn total_dim(&self) -> usize {
        2 * self.space.n_free()
    }

    pub fn u_range(&self) -> std::ops::Range<usize> {
        0..self.block_dim()
    }

    pub fn w_range(&self) -> std::ops::Range<usize> {
        self.block_dim()..self.total_dim()
    }

    pub fn split<'a, T>(&self, x: &'a [T]) -> (&'a [T], &'a [T]) {
        assert_eq!(x.len(), self.total_dim());
        x.split_at(self.block_dim())
    }

    pub fn join<T: Clone>(&self, u: &[T], w: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.block_dim());
        assert_eq!(w.len(), self.block_dim());
        u.iter().chain(w).cloned().collect()
    }

    /// Fill-reducing order of the product DOFs: nested dissection on nodes,
    /// with the `u` and `w` DOFs of each node kept together.
    pub fn ordering(&self) -> Vec<usize> {
        let n = self.block_dim();
        let scalar = self.space.nested_dissection();
        scalar
            .chunks(DOFS_PER_NODE)
            .flat_map(|c| c.iter().copied().chain(c.iter().map(move |&i| i + n)).collect::<Vec<_>>())
            .collect()
    }
}

/// Matrix of the inclusion `S_H -> S_h` between consecutive levels: column
/// `j` holds the Hermite data of coarse basis function `j` at the fine nodes.
pub fn prolongation(coarse: &FeSpace, fine: &FeSpace) -> Result<CsrMatrix<f64>> {
    let (cm, fm) = (coarse.mesh(), fine.mesh());
    match fm.parent() {
        Some(p) if Arc::ptr_eq(p, cm) => {}
        _ => return Err(Error::NotNested),
    }
    let side = cm.cell_side();
    let mut done = vec![false; fm.n_nodes()];
    let mut trip = Vec::new();
    let tables: Vec<Vec<[[f64; 6]; 16]>> = (0..3)
        .map(|b| (0..3).map(|a| element_table(side, [a as f64 / 2.0, b as f64 / 2.0])).collect())
        .collect();
    let data_index = [Deriv::Val, Deriv::Dx, Deriv::Dy, Deriv::Dxy].map(Deriv::index);
    for cell in 0..cm.n_cells() {
        let [ci, cj] = cm.grid_cell(cell);
        let cdofs = coarse.cell_dofs(cell);
        for b in 0..3 {
            for a in 0..3 {
                let fnode = fm.node_at(2 * ci + a, 2 * cj + b).expect("fine node inside coarse cell");
                if done[fnode] || fm.is_boundary(fnode) {
                    continue;
                }
                done[fnode] = true;
                let table = &tables[b][a];
                for (l, &cg) in cdofs.iter().enumerate() {
                    if cg == CONSTRAINED {
                        continue;
                    }
                    for (k, &d) in data_index.iter().enumerate() {
                        let v = table[l][d];
                        if v != 0.0 {
                            trip.push((fine.dof(fnode, k), cg, v));
                        }
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(fine.n_free(), coarse.n_free(), trip))
}

/// Block-diagonal prolongation `diag(P, P)` on the product space.
pub fn product_prolongation(p: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    CsrMatrix::block_2x2(
        [[Some(p), None], [None, Some(p)]],
        ([p.nrows(), p.nrows()], [p.ncols(), p.ncols()]),
    )
}
