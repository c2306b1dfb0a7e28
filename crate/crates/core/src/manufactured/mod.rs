//! Manufactured displacement families and the loads that make them exact.
//!
//! Each family is an analytic `u(t, x, α)`; the body force follows from the
//! momentum balance `f = ü − Dᵀσ` with `σ = C ε` and `ε = D u`. Derivatives
//! are taken numerically (see [`derivative`]) so the linear, 3D, and
//! strain-dependent cases share one code path.

mod alpha;
pub mod derivative;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use alpha::AlphaSplit;

use crate::error::{Error, Result};
use crate::material::{elasticity_matrix_2d, elasticity_matrix_3d};

/// Poisson ratio shared by every manufactured case.
pub const POISSON_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    E1,
    E2,
    E3,
    Ed1,
    Ed2,
    Ed3,
    N1,
    N2,
    N3,
}

/// Functional form shared by `eK`, `edK`, and `nK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sinusoidal,
    Exponential,
    Polynomial,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Sinusoidal => "sinusoidal",
            Family::Exponential => "exponential",
            Family::Polynomial => "polynomial",
        })
    }
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 9] = [
        CaseLabel::E1,
        CaseLabel::E2,
        CaseLabel::E3,
        CaseLabel::Ed1,
        CaseLabel::Ed2,
        CaseLabel::Ed3,
        CaseLabel::N1,
        CaseLabel::N2,
        CaseLabel::N3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::E1 => "e1",
            CaseLabel::E2 => "e2",
            CaseLabel::E3 => "e3",
            CaseLabel::Ed1 => "ed1",
            CaseLabel::Ed2 => "ed2",
            CaseLabel::Ed3 => "ed3",
            CaseLabel::N1 => "n1",
            CaseLabel::N2 => "n2",
            CaseLabel::N3 => "n3",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            CaseLabel::Ed1 | CaseLabel::Ed2 | CaseLabel::Ed3 => 3,
            _ => 2,
        }
    }

    pub fn family(self) -> Family {
        match self {
            CaseLabel::E1 | CaseLabel::Ed1 | CaseLabel::N1 => Family::Sinusoidal,
            CaseLabel::E2 | CaseLabel::Ed2 | CaseLabel::N2 => Family::Exponential,
            CaseLabel::E3 | CaseLabel::Ed3 | CaseLabel::N3 => Family::Polynomial,
        }
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, CaseLabel::N1 | CaseLabel::N2 | CaseLabel::N3)
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Young's modulus law attached to a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaterialModel {
    Constant(f64),
    /// `E(ε) = 5 / √(20 + ‖ε‖_F)`.
    StrainDependent,
}

/// Voigt strain: `[ε_xx, ε_yy, γ_xy]` in 2D,
/// `[ε_xx, ε_yy, ε_zz, γ_yz, γ_zx, γ_xy]` in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrainState {
    Plane([f64; 3]),
    Solid([f64; 6]),
}

impl StrainState {
    pub fn components(&self) -> &[f64] {
        match self {
            StrainState::Plane(v) => v,
            StrainState::Solid(v) => v,
        }
    }

    /// Frobenius norm of the strain tensor; each engineering shear strain
    /// contributes twice at half its value.
    pub fn frobenius_norm(&self) -> f64 {
        let normal = if matches!(self, StrainState::Plane(_)) { 2 } else { 3 };
        let v = self.components();
        let sq: f64 = v[..normal].iter().map(|e| e * e).sum::<f64>()
            + v[normal..].iter().map(|g| 0.5 * g * g).sum::<f64>();
        sq.sqrt()
    }
}

/// Strain-softening modulus `5 / √(20 + ‖ε‖_F)`.
pub fn young_modulus(strain: &StrainState) -> f64 {
    5.0 / (20.0 + strain.frobenius_norm()).sqrt()
}

// (component, direction) pairs making up each Voigt row of D.
const VOIGT_2D: [&[(usize, usize)]; 3] = [&[(0, 0)], &[(1, 1)], &[(0, 1), (1, 0)]];
const VOIGT_3D: [&[(usize, usize)]; 6] = [
    &[(0, 0)],
    &[(1, 1)],
    &[(2, 2)],
    &[(1, 2), (2, 1)],
    &[(0, 2), (2, 0)],
    &[(0, 1), (1, 0)],
];

fn voigt_rows(dim: usize) -> &'static [&'static [(usize, usize)]] {
    if dim == 2 {
        &VOIGT_2D
    } else {
        &VOIGT_3D
    }
}

pub type Vec3 = [f64; 3];
pub type Voigt = [f64; 6];

/// Which numerical route [`ManufacturedCase::load_via`] takes for `Dᵀσ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadRoute {
    /// Differentiate the stress field `σ(x) = C(ε(x)) ε(x)` again.
    /// Valid for any material law.
    NestedStress,
    /// Apply `Dᵀ C D` to the displacement Hessian. Requires a constant `C`.
    Hessian,
}

/// Anything that provides an analytic displacement `u(t, x, α)`.
pub trait DisplacementField {
    /// 2 or 3; components beyond the dimension are zero.
    fn dimension(&self) -> usize;
    fn displacement(&self, alpha: f64, t: f64, x: Vec3) -> Vec3;
}

impl DisplacementField for CaseLabel {
    fn dimension(&self) -> usize {
        CaseLabel::dimension(*self)
    }

    fn displacement(&self, alpha: f64, t: f64, x: Vec3) -> Vec3 {
        let [x, y, z] = x;
        match self {
            CaseLabel::E1 | CaseLabel::N1 => {
                let phase = PI * (x + alpha * y);
                [phase.sin() * (alpha * t).cos(), phase.cos() * (alpha * t).sin(), 0.0]
            }
            CaseLabel::E2 | CaseLabel::N2 => {
                let d = 1.0 + alpha + t * t;
                [
                    ((-t * x * x + y * y) / d).exp(),
                    ((t * x * x - y * y) / d).exp(),
                    0.0,
                ]
            }
            CaseLabel::E3 | CaseLabel::N3 => {
                let s = t + 0.5;
                [
                    x.powi(3) + y * y * s.powf(1.5) + x * y * alpha,
                    x * x + y.powi(3) * s.powf(1.1) + x * y * alpha,
                    0.0,
                ]
            }
            CaseLabel::Ed1 => {
                let phase = PI * (x + alpha * y + 0.5 * (1.0 + alpha) * z);
                let st = (alpha * t).sin();
                [phase.sin() * (alpha * t).cos(), phase.cos() * st, -phase.cos() * st]
            }
            CaseLabel::Ed2 => {
                let d = 1.0 + alpha + t * t;
                let (tx2, y2, z2) = (t * x * x, y * y, z * z);
                [
                    ((-tx2 + y2 + z2) / d).exp(),
                    ((tx2 - y2 + z2) / d).exp(),
                    ((tx2 + y2 - z2) / d).exp(),
                ]
            }
            CaseLabel::Ed3 => {
                let s = t + 0.5;
                let (s15, s11, rs) = (s.powf(1.5), s.powf(1.1), s.sqrt());
                [
                    x.powi(3) + y * y * s15 + x * y * alpha + rs * z * z + z * (x + y) * alpha,
                    x * x + y.powi(3) * s11 - x * y * alpha + rs * z * z + z * (x - y) * alpha,
                    x * x + y * y * s11 + x * y * alpha + rs * z.powi(3) + z * (y - x) * alpha,
                ]
            }
        }
    }

}

/// Closure-backed field, handy for one-off checks.
pub struct FnField<F> {
    pub dimension: usize,
    pub f: F,
}

impl<F: Fn(f64, f64, Vec3) -> Vec3> DisplacementField for FnField<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn displacement(&self, alpha: f64, t: f64, x: Vec3) -> Vec3 {
        (self.f)(alpha, t, x)
    }
}

/// A displacement field in a body with the given material law; derives
/// strain, stress, and the balancing load.
pub struct Continuum<F> {
    pub field: F,
    pub material: MaterialModel,
    pub poisson_ratio: f64,
}

impl<F: DisplacementField> Continuum<F> {
    pub fn gradient(&self, alpha: f64, t: f64, x: Vec3) -> [Vec3; 3] {
        let mut grad = [[0.0; 3]; 3];
        for d in 0..self.field.dimension() {
            let col = derivative::first(|s| {
                let mut p = x;
                p[d] += s;
                self.field.displacement(alpha, t, p)
            });
            for c in 0..3 {
                grad[c][d] = col[c];
            }
        }
        grad
    }

    fn voigt_strain(&self, alpha: f64, t: f64, x: Vec3) -> Voigt {
        let grad = self.gradient(alpha, t, x);
        let mut eps = [0.0; 6];
        for (r, row) in voigt_rows(self.field.dimension()).iter().enumerate() {
            eps[r] = row.iter().map(|&(c, d)| grad[c][d]).sum();
        }
        eps
    }

    fn strain_state(&self, eps: &Voigt) -> StrainState {
        if self.field.dimension() == 2 {
            StrainState::Plane([eps[0], eps[1], eps[2]])
        } else {
            StrainState::Solid(*eps)
        }
    }

    /// `ε = D u` at a point.
    pub fn strain(&self, alpha: f64, t: f64, x: Vec3) -> StrainState {
        self.strain_state(&self.voigt_strain(alpha, t, x))
    }

    fn constitutive(&self, youngs_modulus: f64) -> [[f64; 6]; 6] {
        let mut c = [[0.0; 6]; 6];
        if self.field.dimension() == 2 {
            let c2 = elasticity_matrix_2d(youngs_modulus, self.poisson_ratio)
                .expect("manufactured Poisson ratio is regular");
            for i in 0..3 {
                c[i][..3].copy_from_slice(&c2[i]);
            }
        } else {
            c = elasticity_matrix_3d(youngs_modulus, self.poisson_ratio)
                .expect("manufactured Poisson ratio is regular");
        }
        c
    }

    fn modulus_at(&self, eps: &Voigt) -> f64 {
        match self.material {
            MaterialModel::Constant(e) => e,
            MaterialModel::StrainDependent => young_modulus(&self.strain_state(eps)),
        }
    }

    /// Voigt stress `σ = C(ε) ε` at a point.
    pub fn stress(&self, alpha: f64, t: f64, x: Vec3) -> Voigt {
        let eps = self.voigt_strain(alpha, t, x);
        let c = self.constitutive(self.modulus_at(&eps));
        let n = voigt_rows(self.field.dimension()).len();
        let mut sigma = [0.0; 6];
        for i in 0..n {
            sigma[i] = (0..n).map(|j| c[i][j] * eps[j]).sum();
        }
        sigma
    }

    /// `ü` at a point.
    pub fn acceleration(&self, alpha: f64, t: f64, x: Vec3) -> Vec3 {
        derivative::second(|s| self.field.displacement(alpha, t + s, x))
    }

    fn stress_divergence_nested(&self, alpha: f64, t: f64, x: Vec3) -> Vec3 {
        let dim = self.field.dimension();
        let mut dsigma = [[0.0; 6]; 3];
        for (d, ds) in dsigma.iter_mut().enumerate().take(dim) {
            *ds = derivative::first(|s| {
                let mut p = x;
                p[d] += s;
                self.stress(alpha, t, p)
            });
        }
        let mut div = [0.0; 3];
        for (r, row) in voigt_rows(dim).iter().enumerate() {
            for &(c, d) in row.iter() {
                div[c] += dsigma[d][r];
            }
        }
        div
    }

    fn stress_divergence_hessian(&self, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
        let MaterialModel::Constant(e) = self.material else {
            return Err(Error::InvalidArgument(
                "Hessian load route needs a constant modulus".into(),
            ));
        };
        let dim = self.field.dimension();
        let u = |p: Vec3| self.field.displacement(alpha, t, p);
        // hess[d1][d2][c] = ∂²u_c / ∂x_d1 ∂x_d2
        let mut hess = [[[0.0; 3]; 3]; 3];
        for d1 in 0..dim {
            hess[d1][d1] = derivative::second(|s| {
                let mut p = x;
                p[d1] += s;
                u(p)
            });
            for d2 in 0..d1 {
                let h = derivative::mixed(|s, r| {
                    let mut p = x;
                    p[d1] += s;
                    p[d2] += r;
                    u(p)
                });
                hess[d1][d2] = h;
                hess[d2][d1] = h;
            }
        }
        let c = self.constitutive(e);
        let rows = voigt_rows(dim);
        let mut div = [0.0; 3];
        for (r, row_r) in rows.iter().enumerate() {
            for &(comp, d) in row_r.iter() {
                for (s, row_s) in rows.iter().enumerate() {
                    if c[r][s] == 0.0 {
                        continue;
                    }
                    for &(comp2, d2) in row_s.iter() {
                        div[comp] += c[r][s] * hess[d][d2][comp2];
                    }
                }
            }
        }
        Ok(div)
    }

    /// `f = ü − Dᵀσ` by an explicitly chosen route.
    pub fn load_via(&self, route: LoadRoute, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
        let div = match route {
            LoadRoute::NestedStress => self.stress_divergence_nested(alpha, t, x),
            LoadRoute::Hessian => self.stress_divergence_hessian(alpha, t, x)?,
        };
        let acc = self.acceleration(alpha, t, x);
        let f = [acc[0] - div[0], acc[1] - div[1], acc[2] - div[2]];
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("load at t={t}, x={x:?}, α={alpha}")));
        }
        Ok(f)
    }

    /// Body force admitting this displacement as an exact solution.
    ///
    /// Constant-modulus cases use the cheaper Hessian route; strain-dependent
    /// cases differentiate the stress field.
    pub fn load(&self, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
        let route = match self.material {
            MaterialModel::Constant(_) => LoadRoute::Hessian,
            MaterialModel::StrainDependent => LoadRoute::NestedStress,
        };
        self.load_via(route, alpha, t, x)
    }
}

/// A manufactured solution family together with its material law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub label: CaseLabel,
    pub material: MaterialModel,
    pub poisson_ratio: f64,
}

impl ManufacturedCase {
    pub fn new(label: CaseLabel) -> Self {
        let material = if label.is_nonlinear() {
            MaterialModel::StrainDependent
        } else {
            MaterialModel::Constant(1.0)
        };
        Self {
            label,
            material,
            poisson_ratio: POISSON_RATIO,
        }
    }

    pub fn with_material(mut self, material: MaterialModel) -> Self {
        self.material = material;
        self
    }

    pub fn dimension(&self) -> usize {
        self.label.dimension()
    }

    pub fn continuum(&self) -> Continuum<CaseLabel> {
        Continuum {
            field: self.label,
            material: self.material,
            poisson_ratio: self.poisson_ratio,
        }
    }

    /// `u(t, x, α)`; for 2D cases `x[2]` is ignored and the third component is zero.
    pub fn displacement(&self, alpha: f64, t: f64, x: Vec3) -> Vec3 {
        DisplacementField::displacement(&self.label, alpha, t, x)
    }

    pub fn strain(&self, alpha: f64, t: f64, x: Vec3) -> StrainState {
        self.continuum().strain(alpha, t, x)
    }

    pub fn load_via(&self, route: LoadRoute, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
        self.continuum().load_via(route, alpha, t, x)
    }

    pub fn load(&self, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
        self.continuum().load(alpha, t, x)
    }

    /// In-plane displacement and load of a 3D case on the `z = 0` plane.
    pub fn restrict_to_plane(&self, alpha: f64, t: f64, xy: [f64; 2]) -> Result<PlaneSample> {
        if self.dimension() != 3 {
            return Err(Error::InvalidArgument(format!(
                "{} is already two-dimensional",
                self.label
            )));
        }
        let x = [xy[0], xy[1], 0.0];
        let u = self.displacement(alpha, t, x);
        let f = self.load(alpha, t, x)?;
        Ok(PlaneSample {
            displacement: [u[0], u[1]],
            load: [f[0], f[1]],
        })
    }
}

/// Displacement and body force evaluated on the modelled plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSample {
    pub displacement: [f64; 2],
    pub load: [f64; 2],
}

/// Free-function form of [`ManufacturedCase::displacement`] on the default material.
pub fn eval_displacement(label: CaseLabel, alpha: f64, t: f64, x: Vec3) -> Vec3 {
    ManufacturedCase::new(label).displacement(alpha, t, x)
}

/// Free-function form of [`ManufacturedCase::load`].
pub fn derive_load(case: &ManufacturedCase, alpha: f64, t: f64, x: Vec3) -> Result<Vec3> {
    case.load(alpha, t, x)
}
