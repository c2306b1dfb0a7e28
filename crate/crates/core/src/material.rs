//! Isotropic constitutive matrices in Voigt notation.
//!
//! Strain vectors carry engineering shear strains, `γ = 2ε`, so the shear
//! block of each matrix is the shear modulus `E / (2(1 + ν))`.

use crate::error::{Error, Result};

/// Plane-stress matrix acting on `[ε_xx, ε_yy, γ_xy]`.
pub fn elasticity_matrix_2d(youngs_modulus: f64, poisson_ratio: f64) -> Result<[[f64; 3]; 3]> {
    let nu = poisson_ratio;
    let denom = 1.0 - nu * nu;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularMaterial(nu));
    }
    let s = youngs_modulus / denom;
    Ok([
        [s, s * nu, 0.0],
        [s * nu, s, 0.0],
        [0.0, 0.0, s * (1.0 - nu) / 2.0],
    ])
}

/// 3D matrix acting on `[ε_xx, ε_yy, ε_zz, γ_yz, γ_zx, γ_xy]`.
pub fn elasticity_matrix_3d(youngs_modulus: f64, poisson_ratio: f64) -> Result<[[f64; 6]; 6]> {
    let nu = poisson_ratio;
    let denom = (1.0 + nu) * (1.0 - 2.0 * nu);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularMaterial(nu));
    }
    let s = youngs_modulus / denom;
    let mut c = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = if i == j { s * (1.0 - nu) } else { s * nu };
        }
        c[3 + i][3 + i] = s * (1.0 - 2.0 * nu) / 2.0;
    }
    Ok(c)
}

/// Young's modulus and Poisson ratio of a homogeneous material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMaterial {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl ElasticMaterial {
    /// `E = 1`, `ν = 0.25`, used for every experiment.
    pub const REFERENCE: Self = Self {
        youngs_modulus: 1.0,
        poisson_ratio: 0.25,
    };

    pub fn new(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Young's modulus must be positive, got {youngs_modulus}"
            )));
        }
        if !(poisson_ratio > -1.0 && poisson_ratio < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio must lie in (-1, 0.5), got {poisson_ratio}"
            )));
        }
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
        })
    }

    pub fn plane_matrix(&self) -> [[f64; 3]; 3] {
        elasticity_matrix_2d(self.youngs_modulus, self.poisson_ratio)
            .expect("validated material has a regular plane matrix")
    }

    pub fn solid_matrix(&self) -> [[f64; 6]; 6] {
        elasticity_matrix_3d(self.youngs_modulus, self.poisson_ratio)
            .expect("validated material has a regular solid matrix")
    }
}

impl Default for ElasticMaterial {
    fn default() -> Self {
        Self::REFERENCE
    }
}
