//! P1 finite-element operators for 2D elastodynamics and the three-level
//! time-stepping scheme
//!
//! ```text
//! (A + M/k²) U⁽ⁱ⁺¹⁾ = F⁽ⁱ⁺¹⁾ + (1/k²) M (2U⁽ⁱ⁾ − U⁽ⁱ⁻¹⁾)
//! ```
//!
//! Dirichlet data is imposed on every boundary DOF by elimination: the
//! interior block of `L̂ = A + M/k²` is factored once, and the boundary
//! columns are moved to the right-hand side each step.

use crate::cholesky::BandedCholesky;
use crate::error::{check_len, Error, Result};
use crate::material::ElasticMaterial;
use crate::mesh::{signed_area, DofMap, GridMesh, DOFS_PER_NODE};
use crate::sparse::CsrMatrix;

/// Strain-displacement matrix of a linear triangle and its area.
fn strain_displacement(p: &[[f64; 2]; 3], element: usize) -> Result<([[f64; 6]; 3], f64)> {
    let area = signed_area(p);
    if !(area > 0.0) {
        return Err(Error::DegenerateElement { element, area });
    }
    let mut b = [[0.0; 6]; 3];
    for a in 0..3 {
        let (p1, p2) = (p[(a + 1) % 3], p[(a + 2) % 3]);
        let dx = (p1[1] - p2[1]) / (2.0 * area);
        let dy = (p2[0] - p1[0]) / (2.0 * area);
        b[0][2 * a] = dx;
        b[1][2 * a + 1] = dy;
        b[2][2 * a] = dy;
        b[2][2 * a + 1] = dx;
    }
    Ok((b, area))
}

fn element_dofs(tri: &[usize; 3]) -> [usize; 6] {
    let mut d = [0; 6];
    for (a, &n) in tri.iter().enumerate() {
        d[2 * a] = DofMap::dof(n, 0);
        d[2 * a + 1] = DofMap::dof(n, 1);
    }
    d
}

/// Element stiffness `Bᵀ C B · area` (B is constant on P1 triangles).
pub fn element_stiffness(p: &[[f64; 2]; 3], c: &[[f64; 3]; 3]) -> Result<[[f64; 6]; 6]> {
    let (b, area) = strain_displacement(p, 0)?;
    Ok(stiffness_from_b(&b, area, c))
}

fn stiffness_from_b(b: &[[f64; 6]; 3], area: f64, c: &[[f64; 3]; 3]) -> [[f64; 6]; 6] {
    let mut cb = [[0.0; 6]; 3];
    for r in 0..3 {
        for j in 0..6 {
            cb[r][j] = (0..3).map(|s| c[r][s] * b[s][j]).sum();
        }
    }
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            k[i][j] = area * (0..3).map(|r| b[r][i] * cb[r][j]).sum::<f64>();
        }
    }
    k
}

/// Global stiffness matrix over all DOFs.
pub fn assemble_stiffness(mesh: &GridMesh, c: &[[f64; 3]; 3]) -> Result<CsrMatrix> {
    let n = DOFS_PER_NODE * mesh.node_count();
    let mut triplets = Vec::with_capacity(36 * mesh.element_count());
    for (e, tri) in mesh.elements().iter().enumerate() {
        let (b, area) = strain_displacement(&mesh.element_coords(e), e)?;
        let k = stiffness_from_b(&b, area, c);
        let dofs = element_dofs(tri);
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((dofs[i], dofs[j], k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Consistent mass matrix: `area/12 · [[2,1,1],[1,2,1],[1,1,2]]` per component.
pub fn assemble_mass(mesh: &GridMesh) -> Result<CsrMatrix> {
    let n = DOFS_PER_NODE * mesh.node_count();
    let mut triplets = Vec::with_capacity(18 * mesh.element_count());
    for (e, tri) in mesh.elements().iter().enumerate() {
        let area = mesh.signed_area(e);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement { element: e, area });
        }
        for a in 0..3 {
            for b in 0..3 {
                let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                for comp in 0..DOFS_PER_NODE {
                    triplets.push((DofMap::dof(tri[a], comp), DofMap::dof(tri[b], comp), m));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Edge-midpoint quadrature for load vectors.
///
/// Each unique edge midpoint is evaluated once and shared by the (up to two)
/// triangles that contain the edge. The rule integrates quadratics exactly.
#[derive(Debug, Clone)]
pub struct LoadQuadrature {
    total_dofs: usize,
    midpoints: Vec<[f64; 2]>,
    // Per element: node triple, area, and the midpoint index of each edge
    // (edge a joins local nodes a and a+1).
    elements: Vec<([usize; 3], f64, [usize; 3])>,
}

impl LoadQuadrature {
    pub fn new(mesh: &GridMesh) -> Result<Self> {
        let mut index = std::collections::HashMap::new();
        let mut midpoints = Vec::new();
        let mut elements = Vec::with_capacity(mesh.element_count());
        let nodes = mesh.nodes();
        for (e, tri) in mesh.elements().iter().enumerate() {
            let area = mesh.signed_area(e);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: e, area });
            }
            let mut edge_ids = [0; 3];
            for a in 0..3 {
                let (p, q) = (tri[a], tri[(a + 1) % 3]);
                let key = (p.min(q), p.max(q));
                edge_ids[a] = *index.entry(key).or_insert_with(|| {
                    let (x, y) = (nodes[p], nodes[q]);
                    midpoints.push([0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])]);
                    midpoints.len() - 1
                });
            }
            elements.push((*tri, area, edge_ids));
        }
        Ok(Self {
            total_dofs: DOFS_PER_NODE * mesh.node_count(),
            midpoints,
            elements,
        })
    }

    /// Points at which the load field must be sampled.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.midpoints
    }

    /// Assembles the load vector from field values at [`Self::points`].
    pub fn assemble(&self, values: &[[f64; 2]]) -> Result<Vec<f64>> {
        check_len("load samples", self.midpoints.len(), values.len())?;
        if let Some(k) = values.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::NonFinite(format!(
                "load at {:?}",
                self.midpoints[k]
            )));
        }
        let mut f = vec![0.0; self.total_dofs];
        for (tri, area, edges) in &self.elements {
            for a in 0..3 {
                // φ_a is 1/2 on the two edges touching node a, 0 on the third.
                let (m_next, m_prev) = (values[edges[a]], values[edges[(a + 2) % 3]]);
                for comp in 0..DOFS_PER_NODE {
                    f[DofMap::dof(tri[a], comp)] += area / 6.0 * (m_next[comp] + m_prev[comp]);
                }
            }
        }
        Ok(f)
    }

    pub fn assemble_with(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
        let values: Vec<_> = self.midpoints.iter().map(|&p| f(p)).collect();
        self.assemble(&values)
    }
}

/// Load vector `∫ f·φ_i` by the three-edge-midpoint rule.
pub fn assemble_load(mesh: &GridMesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    LoadQuadrature::new(mesh)?.assemble_with(f)
}

/// Nodal interpolation of a displacement field.
pub fn project_initial(mesh: &GridMesh, u0: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(DOFS_PER_NODE * mesh.node_count());
    for &p in mesh.nodes() {
        let u = u0(p);
        if !(u[0].is_finite() && u[1].is_finite()) {
            return Err(Error::NonFinite(format!("initial displacement at {p:?}")));
        }
        out.extend_from_slice(&u);
    }
    Ok(out)
}

// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
const DUNAVANT_7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `‖u_h − u‖_{L²(Ω)}` where `u_h` is the P1 field with the given nodal values.
pub fn l2_error(mesh: &GridMesh, nodal: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> Result<f64> {
    check_len("l2 error nodal vector", DOFS_PER_NODE * mesh.node_count(), nodal.len())?;
    let mut sum = 0.0;
    for (e, tri) in mesh.elements().iter().enumerate() {
        let p = mesh.element_coords(e);
        let area = signed_area(&p);
        for (bary, w) in DUNAVANT_7 {
            let x = [
                (0..3).map(|a| bary[a] * p[a][0]).sum(),
                (0..3).map(|a| bary[a] * p[a][1]).sum(),
            ];
            let u = exact(x);
            for comp in 0..DOFS_PER_NODE {
                let uh: f64 = (0..3).map(|a| bary[a] * nodal[DofMap::dof(tri[a], comp)]).sum();
                sum += w * area * (uh - u[comp]).powi(2);
            }
        }
    }
    Ok(sum.sqrt())
}

/// Stiffness, mass, and the combined step operator `L̂ = A + M/k²`.
#[derive(Debug, Clone)]
pub struct FemOperators {
    dofs: DofMap,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    time_step: f64,
    combined: CsrMatrix,
}

impl FemOperators {
    pub fn assemble(mesh: &GridMesh, material: &ElasticMaterial, time_step: f64) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh, &material.plane_matrix())?;
        let mass = assemble_mass(mesh)?;
        Self::from_matrices(stiffness, mass, time_step, mesh.dof_map())
    }

    /// Wraps externally built operators; `dofs` fixes the Dirichlet split.
    pub fn from_matrices(stiffness: CsrMatrix, mass: CsrMatrix, time_step: f64, dofs: DofMap) -> Result<Self> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {time_step}"
            )));
        }
        for m in [&stiffness, &mass] {
            check_len("operator rows", dofs.total(), m.nrows())?;
            check_len("operator cols", dofs.total(), m.ncols())?;
        }
        let combined = stiffness.linear_combination(1.0, &mass, 1.0 / (time_step * time_step))?;
        Ok(Self {
            dofs,
            stiffness,
            mass,
            time_step,
            combined,
        })
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn combined(&self) -> &CsrMatrix {
        &self.combined
    }

    pub fn interior_block(&self) -> CsrMatrix {
        self.combined.submatrix(self.dofs.interior(), self.dofs.interior())
    }

    pub fn coupling_block(&self) -> CsrMatrix {
        self.combined.submatrix(self.dofs.interior(), self.dofs.boundary())
    }
}

/// Interior system left after eliminating Dirichlet DOFs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Restricts `L̂ u = rhs` to interior DOFs with boundary values `g`:
/// `L̂ᵢᵢ uᵢ = rhsᵢ − L̂ᵢᵦ g`.
pub fn apply_dirichlet(ops: &FemOperators, rhs: &[f64], boundary_values: &[f64]) -> Result<ReducedSystem> {
    let dofs = ops.dofs();
    check_len("dirichlet rhs", dofs.total(), rhs.len())?;
    check_len("dirichlet boundary values", dofs.boundary().len(), boundary_values.len())?;
    let coupled = ops.coupling_block().mul_vec(boundary_values)?;
    let rhs = dofs
        .interior()
        .iter()
        .zip(&coupled)
        .map(|(&d, c)| rhs[d] - c)
        .collect();
    Ok(ReducedSystem {
        matrix: ops.interior_block(),
        rhs,
    })
}

/// Displacement vectors at two consecutive time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub prev: Vec<f64>,
    pub curr: Vec<f64>,
    /// Level of `curr`.
    pub level: usize,
}

impl StatePair {
    pub fn new(prev: Vec<f64>, curr: Vec<f64>, level: usize) -> Result<Self> {
        check_len("state pair", prev.len(), curr.len())?;
        Ok(Self { prev, curr, level })
    }

    /// Shifts the window one level forward.
    pub fn advance(&mut self, next: Vec<f64>) {
        self.prev = std::mem::replace(&mut self.curr, next);
        self.level += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.prev.iter().chain(&self.curr).all(|v| v.is_finite())
    }
}

/// Factored step operator, reused for every level of every trajectory that
/// shares the same mesh, material, and time step.
#[derive(Debug, Clone)]
pub struct TimeStepper {
    ops: FemOperators,
    interior: CsrMatrix,
    coupling: CsrMatrix,
    factor: BandedCholesky,
}

impl TimeStepper {
    pub fn new(ops: FemOperators) -> Result<Self> {
        let interior = ops.interior_block();
        let coupling = ops.coupling_block();
        let factor = BandedCholesky::factor(&interior)?;
        Ok(Self {
            ops,
            interior,
            coupling,
            factor,
        })
    }

    pub fn operators(&self) -> &FemOperators {
        &self.ops
    }

    pub fn dofs(&self) -> &DofMap {
        self.ops.dofs()
    }

    pub fn interior_block(&self) -> &CsrMatrix {
        &self.interior
    }

    /// Interior part of `F + (1/k²) M (2U⁽ⁱ⁾ − U⁽ⁱ⁻¹⁾)`, before the boundary
    /// columns are eliminated.
    pub fn rhs(&self, state: &StatePair, load: &[f64]) -> Result<Vec<f64>> {
        let dofs = self.ops.dofs();
        check_len("step state", dofs.total(), state.curr.len())?;
        check_len("step load", dofs.total(), load.len())?;
        let k2 = self.ops.time_step() * self.ops.time_step();
        let history: Vec<f64> = state
            .curr
            .iter()
            .zip(&state.prev)
            .map(|(c, p)| 2.0 * c - p)
            .collect();
        let mh = self.ops.mass().mul_vec(&history)?;
        Ok(dofs.interior().iter().map(|&d| load[d] + mh[d] / k2).collect())
    }

    /// Solves `L̂ᵢᵢ uᵢ = rhs − L̂ᵢᵦ g (+ correction)` and returns the full vector
    /// with boundary DOFs set to `g`.
    pub fn solve(&self, rhs_interior: &[f64], boundary_values: &[f64], correction: Option<&[f64]>) -> Result<Vec<f64>> {
        let dofs = self.ops.dofs();
        check_len("interior rhs", dofs.interior().len(), rhs_interior.len())?;
        check_len("boundary values", dofs.boundary().len(), boundary_values.len())?;
        let coupled = self.coupling.mul_vec(boundary_values)?;
        let mut x: Vec<f64> = rhs_interior.iter().zip(&coupled).map(|(r, c)| r - c).collect();
        if let Some(r) = correction {
            check_len("correction", x.len(), r.len())?;
            x.iter_mut().zip(r).for_each(|(xi, ri)| *xi += ri);
        }
        self.factor.solve_in_place(&mut x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time-step solution".into()));
        }
        Ok(dofs.scatter(&x, boundary_values))
    }

    /// One level of the uncorrected scheme.
    pub fn step(&self, state: &StatePair, load: &[f64], boundary_values: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.rhs(state, load)?;
        self.solve(&rhs, boundary_values, None)
    }

    /// Interior residual `L̂ᵢᵢ ǔᵢ + L̂ᵢᵦ ǔ_b − rhs` of a full vector against an
    /// interior right-hand side.
    pub fn residual(&self, full: &[f64], rhs_interior: &[f64]) -> Result<Vec<f64>> {
        let dofs = self.ops.dofs();
        check_len("residual state", dofs.total(), full.len())?;
        check_len("residual rhs", dofs.interior().len(), rhs_interior.len())?;
        let ui = self.interior.mul_vec(&dofs.gather_interior(full))?;
        let ub = self.coupling.mul_vec(&dofs.gather_boundary(full))?;
        Ok(ui
            .iter()
            .zip(&ub)
            .zip(rhs_interior)
            .map(|((a, b), r)| a + b - r)
            .collect())
    }
}

/// One application of the scheme with a freshly factored operator.
pub fn time_step(ops: &FemOperators, state: &StatePair, load: &[f64], boundary_values: &[f64]) -> Result<Vec<f64>> {
    TimeStepper::new(ops.clone())?.step(state, load, boundary_values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_ops(n: usize, dt: f64) -> (GridMesh, FemOperators) {
        let mesh = GridMesh::new(n, n).unwrap();
        let ops = FemOperators::assemble(&mesh, &ElasticMaterial::REFERENCE, dt).unwrap();
        (mesh, ops)
    }

    #[test]
    fn stiffness_kernel_contains_rigid_modes() {
        let (mesh, ops) = reference_ops(4, 0.1);
        let a = ops.stiffness();
        let tx: Vec<f64> = (0..mesh.node_count()).flat_map(|_| [1.0, 0.0]).collect();
        let ty: Vec<f64> = (0..mesh.node_count()).flat_map(|_| [0.0, 1.0]).collect();
        let rot: Vec<f64> = mesh.nodes().iter().flat_map(|p| [-p[1], p[0]]).collect();
        for v in [tx, ty, rot] {
            let av = a.mul_vec(&v).unwrap();
            assert!(av.iter().all(|x| x.abs() < 1e-12));
        }
        assert!(a.max_asymmetry() < 1e-14);
    }

    #[test]
    fn mass_sums_to_twice_area() {
        let (_, ops) = reference_ops(5, 0.1);
        let s: f64 = ops.mass().values().iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(BandedCholesky::factor(ops.mass()).is_ok());
    }

    #[test]
    fn reference_triangle_mass_block() {
        let mesh = GridMesh::new(1, 1).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        // Node 1 (1,0) touches only the first triangle, of area 1/2.
        assert!((m.get(2, 2) - 1.0 / 12.0).abs() < 1e-15);
        assert!((m.get(2, 0) - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(m.get(2, 3), 0.0);
    }

    #[test]
    fn degenerate_element_rejected() {
        let p = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let c = ElasticMaterial::REFERENCE.plane_matrix();
        assert!(matches!(
            element_stiffness(&p, &c),
            Err(Error::DegenerateElement { .. })
        ));
    }

    #[test]
    fn load_of_constant_field() {
        let mesh = GridMesh::new(3, 2).unwrap();
        let f = assemble_load(&mesh, |_| [1.0, 0.0]).unwrap();
        let sx: f64 = f.iter().step_by(2).sum();
        let sy: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((sx - 1.0).abs() < 1e-14);
        assert_eq!(sy, 0.0);
        let zero = assemble_load(&mesh, |_| [0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(assemble_load(&mesh, |_| [f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn projection_reproduces_linear_fields() {
        let mesh = GridMesh::new(3, 3).unwrap();
        let u = project_initial(&mesh, |p| [2.0 * p[0] - p[1], 0.5 + p[1]]).unwrap();
        for (n, p) in mesh.nodes().iter().enumerate() {
            assert_eq!(u[2 * n], 2.0 * p[0] - p[1]);
            assert_eq!(u[2 * n + 1], 0.5 + p[1]);
        }
        let l2 = l2_error(&mesh, &u, |p| [2.0 * p[0] - p[1], 0.5 + p[1]]).unwrap();
        assert!(l2 < 1e-14);
        assert!(project_initial(&mesh, |_| [0.0, 0.0]).unwrap().iter().all(|&v| v == 0.0));
        assert!(project_initial(&mesh, |_| [f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn synthetic_identity_mass_step() {
        // A = 0, M = I, no boundary: U⁺ = k²F + 2U − U⁻.
        let n = 3;
        let dofs = DofMap::from_mask(&vec![false; n]);
        let k = 0.5;
        let ops = FemOperators::from_matrices(CsrMatrix::zeros(n, n), CsrMatrix::identity(n), k, dofs).unwrap();
        let state = StatePair::new(vec![1.0, 0.0, -1.0], vec![2.0, 1.0, 0.0], 1).unwrap();
        let f = [4.0, -4.0, 8.0];
        let next = time_step(&ops, &state, &f, &[]).unwrap();
        for i in 0..n {
            let expected = k * k * f[i] + 2.0 * state.curr[i] - state.prev[i];
            assert!((next[i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let (_, ops) = reference_ops(3, 0.1);
        let n = ops.dofs().total();
        let nb = ops.dofs().boundary().len();
        let stepper = TimeStepper::new(ops).unwrap();
        let state = StatePair::new(vec![0.0; n], vec![0.0; n], 0).unwrap();
        let next = stepper.step(&state, &vec![0.0; n], &vec![0.0; nb]).unwrap();
        assert!(next.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_with_zero_data_leaves_rhs() {
        let (_, ops) = reference_ops(2, 0.1);
        let rhs: Vec<f64> = (0..ops.dofs().total()).map(|i| i as f64).collect();
        let nb = ops.dofs().boundary().len();
        let red = apply_dirichlet(&ops, &rhs, &vec![0.0; nb]).unwrap();
        assert_eq!(red.rhs, ops.dofs().gather_interior(&rhs));
        assert!(apply_dirichlet(&ops, &rhs, &[0.0]).is_err());
    }

    #[test]
    fn dirichlet_without_coupling() {
        let n = 4;
        let mask = [true, false, false, true];
        let dofs = DofMap::from_mask(&mask);
        let ops = FemOperators::from_matrices(CsrMatrix::identity(n), CsrMatrix::identity(n), 1.0, dofs).unwrap();
        let rhs = [9.0, 1.0, 2.0, 9.0];
        let red = apply_dirichlet(&ops, &rhs, &[5.0, -3.0]).unwrap();
        assert_eq!(red.rhs, vec![1.0, 2.0]);
    }

    #[test]
    fn reduced_operator_is_positive_definite() {
        let (_, ops) = reference_ops(6, 1e-3);
        assert!(BandedCholesky::factor(&ops.interior_block()).is_ok());
        // Without the mass shift, the stiffness alone is still SPD once clamped.
        let a_ii = ops.stiffness().submatrix(ops.dofs().interior(), ops.dofs().interior());
        assert!(BandedCholesky::factor(&a_ii).is_ok());
    }

    #[test]
    fn residual_of_own_solution_vanishes() {
        let (mesh, ops) = reference_ops(4, 0.05);
        let stepper = TimeStepper::new(ops).unwrap();
        let u = project_initial(&mesh, |p| [p[0] * p[1], p[0].sin()]).unwrap();
        let state = StatePair::new(u.clone(), u.clone(), 0).unwrap();
        let load = assemble_load(&mesh, |p| [p[1], 1.0]).unwrap();
        let g = stepper.dofs().gather_boundary(&u);
        let rhs = stepper.rhs(&state, &load).unwrap();
        let next = stepper.solve(&rhs, &g, None).unwrap();
        let r = stepper.residual(&next, &rhs).unwrap();
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.iter().all(|v| v.abs() < 1e-10 * scale));
        for (&d, &v) in stepper.dofs().boundary().iter().zip(&g) {
            assert_eq!(next[d], v);
        }
    }
}
