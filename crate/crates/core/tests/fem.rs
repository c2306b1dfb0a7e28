use costa_core::fem::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, l2_error, project_initial, FemOperators,
    StatePair, TimeStepper,
};
use costa_core::manufactured::{CaseLabel, ManufacturedCase};
use costa_core::material::{elasticity_matrix_2d, ElasticMaterial};
use costa_core::mesh::{DofMap, GridMesh};

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

// Shape-function gradients from the inverse Jacobian of the affine map.
fn shape_gradients(p: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let j = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let reference = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        for d in 0..2 {
            g[a][d] = reference[a][0] * inv[0][d] + reference[a][1] * inv[1][d];
        }
    }
    (g, det.abs() / 2.0)
}

#[test]
fn stiffness_matches_quadrature_assembly() {
    let mesh = GridMesh::new(2, 2).unwrap();
    let c = elasticity_matrix_2d(1.0, 0.25).unwrap();
    let n = 2 * mesh.node_count();
    let mut oracle = vec![vec![0.0; n]; n];
    let gauss = [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]];
    for (e, tri) in mesh.elements().iter().enumerate() {
        let (g, area) = shape_gradients(&mesh.element_coords(e));
        for _point in gauss {
            let w = area / 3.0;
            for a in 0..3 {
                for b in 0..3 {
                    for ca in 0..2 {
                        for cb in 0..2 {
                            // ε(φ_a e_ca) in Voigt form
                            let mut ea = [0.0; 3];
                            ea[ca] = g[a][ca];
                            ea[2] = g[a][1 - ca];
                            let mut eb = [0.0; 3];
                            eb[cb] = g[b][cb];
                            eb[2] = g[b][1 - cb];
                            let mut v = 0.0;
                            for r in 0..3 {
                                for s in 0..3 {
                                    v += ea[r] * c[r][s] * eb[s];
                                }
                            }
                            oracle[2 * tri[a] + ca][2 * tri[b] + cb] += w * v;
                        }
                    }
                }
            }
        }
    }
    let a = assemble_stiffness(&mesh, &c).unwrap().to_dense();
    for i in 0..n {
        for j in 0..n {
            assert!((a[i][j] - oracle[i][j]).abs() < 1e-12, "({i},{j}) {} vs {}", a[i][j], oracle[i][j]);
        }
    }
}

#[test]
fn load_matches_seven_point_rule() {
    let mesh = GridMesh::new(2, 2).unwrap();
    let f = |p: [f64; 2]| [p[0], p[1]];
    // 7-point degree-5 rule; integrand f·φ is quadratic so both rules are exact.
    let a1 = 0.059_715_871_789_769_82;
    let b1 = 0.470_142_064_105_115_1;
    let a2 = 0.797_426_985_353_087_3;
    let b2 = 0.101_286_507_323_456_3;
    let (w0, w1, w2) = (0.225, 0.132_394_152_788_506_2, 0.125_939_180_544_827_1);
    let rule = [
        ([1.0 / 3.0; 3], w0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ];
    let mut oracle = vec![0.0; 2 * mesh.node_count()];
    for (e, tri) in mesh.elements().iter().enumerate() {
        let p = mesh.element_coords(e);
        let (_, area) = shape_gradients(&p);
        for (l, w) in rule {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let v = f(x);
            for a in 0..3 {
                oracle[2 * tri[a]] += w * area * v[0] * l[a];
                oracle[2 * tri[a] + 1] += w * area * v[1] * l[a];
            }
        }
    }
    let load = assemble_load(&mesh, f).unwrap();
    for (u, v) in load.iter().zip(&oracle) {
        assert!((u - v).abs() < 1e-10);
    }
}

#[test]
fn elimination_matches_row_replacement() {
    let mesh = GridMesh::new(2, 2).unwrap();
    let dt = 0.01;
    let ops = FemOperators::assemble(&mesh, &ElasticMaterial::REFERENCE, dt).unwrap();
    let case = ManufacturedCase::new(CaseLabel::E3);
    let (alpha, t) = (1.0, 0.5);
    let exact = |t: f64| {
        project_initial(&mesh, |p| {
            let u = case.displacement(alpha, t, [p[0], p[1], 0.0]);
            [u[0], u[1]]
        })
        .unwrap()
    };
    let load = assemble_load(&mesh, |p| {
        let f = case.load(alpha, t, [p[0], p[1], 0.0]).unwrap();
        [f[0], f[1]]
    })
    .unwrap();
    let state = StatePair::new(exact(t - 2.0 * dt), exact(t - dt), 0).unwrap();
    let next = exact(t);
    let dofs = ops.dofs().clone();
    let g = dofs.gather_boundary(&next);

    let history: Vec<f64> = state.curr.iter().zip(&state.prev).map(|(c, p)| 2.0 * c - p).collect();
    let mh = ops.mass().mul_vec(&history).unwrap();
    let full_rhs: Vec<f64> = load.iter().zip(&mh).map(|(f, m)| f + m / (dt * dt)).collect();

    let mut a = ops.combined().to_dense();
    let mut b = full_rhs.clone();
    for (&d, &v) in dofs.boundary().iter().zip(&g) {
        a[d].iter_mut().for_each(|x| *x = 0.0);
        a[d][d] = 1.0;
        b[d] = v;
    }
    let oracle = dense_solve(a, b);

    let stepper = TimeStepper::new(ops.clone()).unwrap();
    let via_stepper = stepper.step(&state, &load, &g).unwrap();
    let reduced = apply_dirichlet(&ops, &full_rhs, &g).unwrap();
    let interior = dense_solve(reduced.matrix.to_dense(), reduced.rhs);
    let via_reduced = dofs.scatter(&interior, &g);
    for i in 0..oracle.len() {
        assert!((via_stepper[i] - oracle[i]).abs() < 1e-12);
        assert!((via_reduced[i] - oracle[i]).abs() < 1e-12);
    }
}

#[test]
fn galerkin_consistency_for_discrete_fields() {
    // Linear in space, quadratic in time: σ is constant, so f = ü exactly.
    let shape = |t: f64| 1.0 + t + 0.5 * t * t;
    let u = move |t: f64, p: [f64; 2]| {
        let s = shape(t);
        [s * (p[0] + 2.0 * p[1]), s * (3.0 * p[0] - p[1])]
    };
    let f = |p: [f64; 2]| [p[0] + 2.0 * p[1], 3.0 * p[0] - p[1]];
    let mesh = GridMesh::new(5, 5).unwrap();
    let k = 0.05;
    let stepper = TimeStepper::new(FemOperators::assemble(&mesh, &ElasticMaterial::REFERENCE, k).unwrap()).unwrap();
    let nodal = |t: f64| project_initial(&mesh, |p| u(t, p)).unwrap();
    let load = assemble_load(&mesh, f).unwrap();
    let mut state = StatePair::new(nodal(-k), nodal(0.0), 0).unwrap();
    for i in 1..=20 {
        let t = i as f64 * k;
        let exact = nodal(t);
        let next = stepper.step(&state, &load, &stepper.dofs().gather_boundary(&exact)).unwrap();
        for (a, b) in next.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10, "step {i}: {a} vs {b}");
        }
        state.advance(next);
    }
}

fn e3_final_error(n: usize, steps: usize) -> f64 {
    let mesh = GridMesh::new(n, n).unwrap();
    let k = 1.0 / steps as f64;
    let case = ManufacturedCase::new(CaseLabel::E3);
    let alpha = 1.0;
    let stepper = TimeStepper::new(FemOperators::assemble(&mesh, &ElasticMaterial::REFERENCE, k).unwrap()).unwrap();
    let exact_at = |t: f64, p: [f64; 2]| {
        let u = case.displacement(alpha, t, [p[0], p[1], 0.0]);
        [u[0], u[1]]
    };
    let nodal = |t: f64| project_initial(&mesh, |p| exact_at(t, p)).unwrap();
    let mut state = StatePair::new(nodal(-k), nodal(0.0), 0).unwrap();
    for i in 1..=steps {
        let t = i as f64 * k;
        let load = assemble_load(&mesh, |p| {
            let f = case.load(alpha, t, [p[0], p[1], 0.0]).unwrap();
            [f[0], f[1]]
        })
        .unwrap();
        let g = stepper.dofs().gather_boundary(&nodal(t));
        let next = stepper.step(&state, &load, &g).unwrap();
        state.advance(next);
    }
    l2_error(&mesh, &state.curr, |p| exact_at(1.0, p)).unwrap()
}

#[test]
fn spatial_convergence_is_second_order() {
    let coarse = e3_final_error(4, 200);
    let fine = e3_final_error(8, 200);
    let ratio = coarse / fine;
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mass_matrix_is_consistent_p1() {
    let mesh = GridMesh::new(3, 2).unwrap();
    let m = assemble_mass(&mesh).unwrap();
    // ∫ v·w for v = w = (1, 0) is the area.
    let ones: Vec<f64> = (0..mesh.node_count()).flat_map(|_| [1.0, 0.0]).collect();
    let mv = m.mul_vec(&ones).unwrap();
    let total: f64 = mv.iter().zip(&ones).map(|(a, b)| a * b).sum();
    assert!((total - 1.0).abs() < 1e-14);
    assert_eq!(DofMap::dof(3, 1), 7);
}
