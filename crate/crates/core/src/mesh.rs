//! Uniform square-cell meshes and their dyadic refinement.

use std::fmt;
use std::sync::Arc;

/// Computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `(0,1)^2`
    UnitSquare,
    /// `(-1,1)^2 \ [0,1) x (-1,0]`
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 3.0,
        }
    }

    /// Lower-left corner of the bounding box.
    pub fn origin(self) -> [f64; 2] {
        match self {
            Domain::UnitSquare => [0.0, 0.0],
            Domain::LShape => [-1.0, -1.0],
        }
    }

    /// Side of the bounding box in unit lengths.
    pub fn extent(self) -> usize {
        match self {
            Domain::UnitSquare => 1,
            Domain::LShape => 2,
        }
    }

    /// Corners of the domain polygon. Affine fields attain their extrema here.
    pub fn corners(self) -> &'static [[f64; 2]] {
        match self {
            Domain::UnitSquare => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            Domain::LShape => &[
                [-1.0, -1.0],
                [0.0, -1.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [-1.0, 1.0],
            ],
        }
    }

    /// Whether the grid cell with lower-left grid index `(ci, cj)` belongs to
    /// the domain, for a grid with `m` cells per unit length.
    fn has_cell(self, ci: usize, cj: usize, m: usize) -> bool {
        match self {
            Domain::UnitSquare => ci < m && cj < m,
            Domain::LShape => ci < 2 * m && cj < 2 * m && !(ci >= m && cj < m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "l_shape",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const ABSENT: usize = usize::MAX;

/// Mesh of equal axis-aligned squares.
///
/// Nodes are ordered lexicographically by `(y, x)`, cells by their lower-left
/// node. Cell corners are listed counterclockwise from the lower-left one.
#[derive(Debug)]
pub struct RectMesh {
    domain: Domain,
    level: usize,
    divisions: usize,
    cell_side: f64,
    nodes: Vec<[f64; 2]>,
    grid_nodes: Vec<[usize; 2]>,
    cells: Vec<[usize; 4]>,
    grid_cells: Vec<[usize; 2]>,
    boundary: Vec<bool>,
    node_lookup: Vec<usize>,
    cell_lookup: Vec<usize>,
    parent: Option<Arc<RectMesh>>,
    children: Vec<[usize; 4]>,
}

impl RectMesh {
    fn grid(domain: Domain, divisions: usize, level: usize) -> RectMesh {
        let m = divisions;
        let nc = domain.extent() * m;
        let nn = nc + 1;
        let origin = domain.origin();
        let cell_side = 1.0 / m as f64;

        let has_cell = |ci: isize, cj: isize| {
            ci >= 0 && cj >= 0 && domain.has_cell(ci as usize, cj as usize, m)
        };

        let mut node_lookup = vec![ABSENT; nn * nn];
        let mut nodes = Vec::new();
        let mut grid_nodes = Vec::new();
        let mut boundary = Vec::new();
        for j in 0..nn {
            for i in 0..nn {
                let (ii, jj) = (i as isize, j as isize);
                let around = [
                    has_cell(ii - 1, jj - 1),
                    has_cell(ii, jj - 1),
                    has_cell(ii - 1, jj),
                    has_cell(ii, jj),
                ];
                if !around.iter().any(|&c| c) {
                    continue;
                }
                node_lookup[j * nn + i] = nodes.len();
                nodes.push([
                    origin[0] + i as f64 / m as f64,
                    origin[1] + j as f64 / m as f64,
                ]);
                grid_nodes.push([i, j]);
                boundary.push(!around.iter().all(|&c| c));
            }
        }

        let mut cell_lookup = vec![ABSENT; nc * nc];
        let mut cells = Vec::new();
        let mut grid_cells = Vec::new();
        for cj in 0..nc {
            for ci in 0..nc {
                if !domain.has_cell(ci, cj, m) {
                    continue;
                }
                let n = |i: usize, j: usize| node_lookup[j * nn + i];
                cell_lookup[cj * nc + ci] = cells.len();
                cells.push([n(ci, cj), n(ci + 1, cj), n(ci + 1, cj + 1), n(ci, cj + 1)]);
                grid_cells.push([ci, cj]);
            }
        }

        RectMesh {
            domain,
            level,
            divisions,
            cell_side,
            nodes,
            grid_nodes,
            cells,
            grid_cells,
            boundary,
            node_lookup,
            cell_lookup,
            parent: None,
            children: Vec::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Cells per unit length.
    pub fn divisions(&self) -> usize {
        self.divisions
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&n| self.boundary[n])
    }

    /// Integer grid coordinates of a node, in units of `cell_side` from the
    /// domain origin.
    pub fn grid_node(&self, node: usize) -> [usize; 2] {
        self.grid_nodes[node]
    }

    pub fn grid_cell(&self, cell: usize) -> [usize; 2] {
        self.grid_cells[cell]
    }

    fn grid_side(&self) -> usize {
        self.domain.extent() * self.divisions
    }

    pub fn node_at(&self, i: usize, j: usize) -> Option<usize> {
        let nn = self.grid_side() + 1;
        if i >= nn || j >= nn {
            return None;
        }
        Some(self.node_lookup[j * nn + i]).filter(|&n| n != ABSENT)
    }

    pub fn cell_at(&self, ci: usize, cj: usize) -> Option<usize> {
        let nc = self.grid_side();
        if ci >= nc || cj >= nc {
            return None;
        }
        Some(self.cell_lookup[cj * nc + ci]).filter(|&c| c != ABSENT)
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        self.nodes[self.cells[cell][0]]
    }

    /// Finds a cell containing `(x, y)` and the reference coordinates of the
    /// point in it. Points on shared edges resolve to the cell with the
    /// larger grid index when it exists.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, [f64; 2])> {
        let origin = self.domain.origin();
        let nc = self.grid_side() as isize;
        let tx = (x - origin[0]) / self.cell_side;
        let ty = (y - origin[1]) / self.cell_side;
        let eps = 1e-12 * nc as f64;
        if tx < -eps || ty < -eps || tx > nc as f64 + eps || ty > nc as f64 + eps {
            return None;
        }
        let base = [tx.floor() as isize, ty.floor() as isize];
        // try the natural cell first, then neighbours for points on edges
        for dj in [0isize, -1] {
            for di in [0isize, -1] {
                let ci = (base[0] + di).clamp(0, nc - 1);
                let cj = (base[1] + dj).clamp(0, nc - 1);
                if let Some(cell) = self.cell_at(ci as usize, cj as usize) {
                    let xi = tx - ci as f64;
                    let eta = ty - cj as f64;
                    let tol = 1e-10;
                    if (-tol..=1.0 + tol).contains(&xi) && (-tol..=1.0 + tol).contains(&eta) {
                        return Some((cell, [xi.clamp(0.0, 1.0), eta.clamp(0.0, 1.0)]));
                    }
                }
            }
        }
        None
    }

    pub fn parent(&self) -> Option<&Arc<RectMesh>> {
        self.parent.as_ref()
    }

    /// For each parent cell, its four children (lower-left, lower-right,
    /// upper-right, upper-left). Empty for a level-1 mesh.
    pub fn children(&self) -> &[[usize; 4]] {
        &self.children
    }
}

/// Coarsest mesh of `domain` with `divisions_per_unit` cells per unit length.
///
/// # Panics
/// If `divisions_per_unit` is zero.
pub fn build_mesh(domain: Domain, divisions_per_unit: usize) -> RectMesh {
    assert!(divisions_per_unit >= 1, "divisions_per_unit must be positive");
    RectMesh::grid(domain, divisions_per_unit, 1)
}

/// Splits every cell into four congruent squares.
pub fn refine_uniform(mesh: &Arc<RectMesh>) -> RectMesh {
    let mut fine = RectMesh::grid(mesh.domain, 2 * mesh.divisions, mesh.level + 1);
    fine.children = mesh
        .grid_cells
        .iter()
        .map(|&[ci, cj]| {
            let (fi, fj) = (2 * ci, 2 * cj);
            let c = |i, j| fine.cell_at(i, j).expect("child cell exists");
            [c(fi, fj), c(fi + 1, fj), c(fi + 1, fj + 1), c(fi, fj + 1)]
        })
        .collect();
    fine.parent = Some(Arc::clone(mesh));
    fine
}

/// Mesh size `h`, the diagonal of a cell.
pub fn mesh_size(mesh: &RectMesh) -> f64 {
    mesh.cell_side * std::f64::consts::SQRT_2
}

/// Builds the mesh of `domain` and refines it until `levels` meshes exist.
pub fn hierarchy(domain: Domain, divisions_per_unit: usize, levels: usize) -> Vec<Arc<RectMesh>> {
    let mut out = vec![Arc::new(build_mesh(domain, divisions_per_unit))];
    while out.len() < levels {
        let next = refine_uniform(out.last().expect("non-empty"));
        out.push(Arc::new(next));
    }
    out
}
