use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::{project_initial, LoadQuadrature, StatePair};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{DofMap, GridMesh};

/// What the physics-based model gets wrong relative to the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelingError {
    /// True load, correct operator.
    None,
    /// The load is dropped entirely.
    ZeroLoad,
    /// A 3D solution modelled on its `z = 0` plane with the in-plane load.
    DimensionReduced,
    /// Strain-dependent truth, constant-modulus operator.
    Linearized,
}

impl ModelingError {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelingError::None => "none",
            ModelingError::ZeroLoad => "zero-load",
            ModelingError::DimensionReduced => "dimension-reduced",
            ModelingError::Linearized => "linearized",
        }
    }

    /// Checks that a solution label makes sense for this mode.
    pub fn check_case(self, case: &ManufacturedCase) -> Result<()> {
        let ok = match self {
            ModelingError::DimensionReduced => case.dimension() == 3,
            ModelingError::Linearized => case.dimension() == 2 && case.label.is_nonlinear(),
            ModelingError::None | ModelingError::ZeroLoad => case.dimension() == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "solution {} does not fit modeling error `{}`",
                case.label,
                self.as_str()
            )))
        }
    }
}

impl std::fmt::Display for ModelingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact nodal states and the PBM's load vectors for one `(case, α)` over
/// `t ∈ {−k, 0, k, …, 1}`.
#[derive(Debug, Clone)]
pub struct Scenario {
    case: ManufacturedCase,
    alpha: f64,
    mode: ModelingError,
    time_step: f64,
    // levels −1..=K, shifted by one
    exact: Vec<Vec<f64>>,
    // levels 0..=K
    loads: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn build(
        mesh: &GridMesh,
        quadrature: &LoadQuadrature,
        case: ManufacturedCase,
        alpha: f64,
        steps: usize,
        mode: ModelingError,
    ) -> Result<Self> {
        mode.check_case(&case)?;
        if steps == 0 {
            return Err(Error::InvalidArgument("at least one time step is required".into()));
        }
        let k = 1.0 / steps as f64;
        // 2D fields live on z = 0 already, so the same restriction serves both.
        let plane = |t: f64, p: [f64; 2]| {
            let u = case.displacement(alpha, t, [p[0], p[1], 0.0]);
            [u[0], u[1]]
        };
        let exact = (-1..=steps as i64)
            .map(|level| project_initial(mesh, |p| plane(level as f64 * k, p)))
            .collect::<Result<Vec<_>>>()?;
        let dofs = 2 * mesh.node_count();
        let loads = (0..=steps)
            .map(|level| {
                if mode == ModelingError::ZeroLoad {
                    return Ok(vec![0.0; dofs]);
                }
                let t = level as f64 * k;
                let values = quadrature
                    .points()
                    .iter()
                    .map(|p| case.load(alpha, t, [p[0], p[1], 0.0]).map(|f| [f[0], f[1]]))
                    .collect::<Result<Vec<_>>>()?;
                quadrature.assemble(&values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            case,
            alpha,
            mode,
            time_step: k,
            exact,
            loads,
        })
    }

    /// Assembles a scenario from precomputed data: `exact` holds levels
    /// `−1..=K`, `loads` levels `0..=K`.
    pub fn from_parts(
        case: ManufacturedCase,
        alpha: f64,
        mode: ModelingError,
        exact: Vec<Vec<f64>>,
        loads: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if loads.len() < 2 {
            return Err(Error::InvalidArgument("at least one time step is required".into()));
        }
        check_len("scenario exact levels", loads.len() + 1, exact.len())?;
        let n = exact[0].len();
        for v in exact.iter().chain(&loads) {
            check_len("scenario vector", n, v.len())?;
        }
        Ok(Self {
            case,
            alpha,
            mode,
            time_step: 1.0 / (loads.len() - 1) as f64,
            exact,
            loads,
        })
    }

    pub fn case(&self) -> &ManufacturedCase {
        &self.case
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> ModelingError {
        self.mode
    }

    pub fn steps(&self) -> usize {
        self.loads.len() - 1
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.time_step
    }

    /// Interpolated exact state at `level ∈ 0..=K`.
    pub fn exact(&self, level: usize) -> &[f64] {
        &self.exact[level + 1]
    }

    /// Exact history `(Ǔ⁽ⁱ⁻¹⁾, Ǔ⁽ⁱ⁾)`; level 0 reaches back to `t = −k`.
    pub fn exact_state(&self, level: usize) -> StatePair {
        StatePair {
            prev: self.exact[level].clone(),
            curr: self.exact[level + 1].clone(),
            level,
        }
    }

    /// Load vector the PBM sees at `level`.
    pub fn load(&self, level: usize) -> &[f64] {
        &self.loads[level]
    }

    pub fn boundary(&self, dofs: &DofMap, level: usize) -> Result<Vec<f64>> {
        check_len("scenario dofs", dofs.total(), self.exact(level).len())?;
        Ok(dofs.gather_boundary(self.exact(level)))
    }
}
