//! Structured triangulations of the unit square and the displacement DOF layout.
//!
//! Nodes are numbered lexicographically with `x` running fastest:
//! node `(i, j)` sits at `(i / nx, j / ny)` and has index `j * (nx + 1) + i`.
//! Every grid cell is split along its lower-left to upper-right diagonal into
//! two counter-clockwise triangles.

use crate::error::{Error, Result};

/// Displacement components carried by every node.
pub const DOFS_PER_NODE: usize = 2;

/// Equidistant triangulation of `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMesh {
    nx: usize,
    ny: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
}

impl GridMesh {
    /// Builds an `nx` by `ny` cell grid, two triangles per cell.
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "mesh needs at least one cell per axis, got {nx}x{ny}"
            )));
        }
        let node = |i: usize, j: usize| j * (nx + 1) + i;

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary_nodes = Vec::with_capacity(2 * (nx + ny));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
                if i == 0 || j == 0 || i == nx || j == ny {
                    boundary_nodes.push(node(i, j));
                }
            }
        }

        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (n00, n10) = (node(i, j), node(i + 1, j));
                let (n01, n11) = (node(i, j + 1), node(i + 1, j + 1));
                elements.push([n00, n10, n11]);
                elements.push([n00, n11, n01]);
            }
        }

        Ok(Self {
            nx,
            ny,
            nodes,
            elements,
            boundary_nodes,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    /// Sorted indices of the nodes on the square's boundary.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let (i, j) = (node % (self.nx + 1), node / (self.nx + 1));
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Vertex coordinates of element `e`.
    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of element `e`; positive for counter-clockwise ordering.
    pub fn signed_area(&self, e: usize) -> f64 {
        signed_area(&self.element_coords(e))
    }

    /// Interior (non-boundary) edges and boundary edges, each listed once as
    /// a sorted node pair, in order of first appearance over the elements.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::new();
        for tri in &self.elements {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = [a.min(b), a.max(b)];
                if seen.insert(key) {
                    edges.push(key);
                }
            }
        }
        edges
    }

    pub fn dof_map(&self) -> DofMap {
        DofMap::new(self)
    }
}

pub(crate) fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Where a global DOF lives after the interior/boundary split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofSlot {
    Interior(usize),
    Boundary(usize),
}

/// Interleaved `(u_x, u_y)` numbering: DOF `2 * node + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    total: usize,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    slots: Vec<DofSlot>,
}

impl DofMap {
    pub fn new(mesh: &GridMesh) -> Self {
        let total = DOFS_PER_NODE * mesh.node_count();
        let is_boundary: Vec<bool> = (0..total)
            .map(|dof| mesh.is_boundary_node(dof / DOFS_PER_NODE))
            .collect();
        Self::from_mask(&is_boundary)
    }

    /// Builds the partition from an explicit per-DOF boundary mask.
    pub fn from_mask(is_boundary: &[bool]) -> Self {
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut slots = Vec::with_capacity(is_boundary.len());
        for (dof, &b) in is_boundary.iter().enumerate() {
            if b {
                slots.push(DofSlot::Boundary(boundary.len()));
                boundary.push(dof);
            } else {
                slots.push(DofSlot::Interior(interior.len()));
                interior.push(dof);
            }
        }
        Self {
            total: is_boundary.len(),
            interior,
            boundary,
            slots,
        }
    }

    pub fn dof(node: usize, component: usize) -> usize {
        DOFS_PER_NODE * node + component
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn slot(&self, dof: usize) -> DofSlot {
        self.slots[dof]
    }

    pub fn gather_interior(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&d| full[d]).collect()
    }

    pub fn gather_boundary(&self, full: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&d| full[d]).collect()
    }

    /// Assembles a full vector from its interior and boundary parts.
    pub fn scatter(&self, interior: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.total];
        for (&d, &v) in self.interior.iter().zip(interior) {
            full[d] = v;
        }
        for (&d, &v) in self.boundary.iter().zip(boundary) {
            full[d] = v;
        }
        full
    }
}
