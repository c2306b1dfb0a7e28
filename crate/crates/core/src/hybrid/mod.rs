//! Physics-based, data-driven, and corrected steppers, their training data,
//! and rollouts from exact initial data.
//!
//! The corrected (CoSTA) step solves the PBM system twice per level:
//!
//! ```text
//! L̂ Ū      = rhs            (uncorrected prediction, the network input)
//! L̂ U⁽ⁱ⁺¹⁾ = rhs + r̂(Ū)     (r̂ predicted on interior DOFs)
//! ```
//!
//! where the training target is the residual `r = L̂ Ǔ⁽ⁱ⁺¹⁾ − rhs` of the
//! interpolated exact state.

mod scenario;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use scenario::{ModelingError, Scenario};

use crate::error::{check_len, Error, Result};
use crate::fem::{StatePair, TimeStepper};
use crate::neural::{Dataset, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pbm,
    Ddm,
    Costa,
}

impl ModelKind {
    /// Canonical order, also the tie-break order.
    pub const ALL: [ModelKind; 3] = [ModelKind::Pbm, ModelKind::Ddm, ModelKind::Costa];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Pbm => "pbm",
            ModelKind::Ddm => "ddm",
            ModelKind::Costa => "costa",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

/// What a residual predictor may look at when asked for level `level`.
pub struct StepContext<'a> {
    pub level: usize,
    /// Uncorrected PBM prediction `Ū` (full DOF vector).
    pub pbm_prediction: &'a [f64],
    /// Interior right-hand side of the uncorrected system.
    pub rhs_interior: &'a [f64],
}

/// Predicts the interior corrective source for one step.
pub trait ResidualModel {
    fn residual(&self, ctx: &StepContext<'_>) -> Result<Vec<f64>>;
}

/// Maps a full state to the interior DOFs of the next level.
pub trait StateModel {
    fn next_interior(&self, state: &[f64]) -> Result<Vec<f64>>;
}

impl ResidualModel for TrainedModel {
    fn residual(&self, ctx: &StepContext<'_>) -> Result<Vec<f64>> {
        self.predict(ctx.pbm_prediction)
    }
}

impl StateModel for TrainedModel {
    fn next_interior(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.predict(state)
    }
}

impl<F> ResidualModel for F
where
    F: Fn(&StepContext<'_>) -> Result<Vec<f64>>,
{
    fn residual(&self, ctx: &StepContext<'_>) -> Result<Vec<f64>> {
        self(ctx)
    }
}

/// Residual of the interpolated exact solution: with it the corrected
/// step reproduces `Ǔ` up to solver round-off.
pub struct ExactResidual<'a> {
    pub scenario: &'a Scenario,
    pub stepper: &'a TimeStepper,
}

impl ResidualModel for ExactResidual<'_> {
    fn residual(&self, ctx: &StepContext<'_>) -> Result<Vec<f64>> {
        compute_residual(self.stepper, self.scenario.exact(ctx.level), ctx.rhs_interior)
    }
}

/// One uncorrected step.
pub fn pbm_predict(stepper: &TimeStepper, state: &StatePair, load: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
    stepper.step(state, load, boundary)
}

/// `r = L̂ᵢᵢ Ǔᵢ + L̂ᵢᵦ g − rhsᵢ` for the exact next state.
pub fn compute_residual(stepper: &TimeStepper, exact_next: &[f64], rhs_interior: &[f64]) -> Result<Vec<f64>> {
    stepper.residual(exact_next, rhs_interior)
}

/// One corrected step; `level` is the level being predicted.
pub fn costa_step(
    stepper: &TimeStepper,
    state: &StatePair,
    load: &[f64],
    boundary: &[f64],
    level: usize,
    model: &dyn ResidualModel,
) -> Result<Vec<f64>> {
    let rhs = stepper.rhs(state, load)?;
    let pbm = stepper.solve(&rhs, boundary, None)?;
    let r = model.residual(&StepContext {
        level,
        pbm_prediction: &pbm,
        rhs_interior: &rhs,
    })?;
    check_len("predicted residual", rhs.len(), r.len())?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("predicted residual".into()));
    }
    stepper.solve(&rhs, boundary, Some(&r))
}

/// One data-driven step; boundary DOFs come from `boundary`.
pub fn ddm_step(stepper: &TimeStepper, prev: &[f64], boundary: &[f64], model: &dyn StateModel) -> Result<Vec<f64>> {
    let dofs = stepper.dofs();
    check_len("ddm state", dofs.total(), prev.len())?;
    let interior = model.next_interior(prev)?;
    check_len("ddm prediction", dofs.interior().len(), interior.len())?;
    if interior.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data-driven prediction".into()));
    }
    check_len("ddm boundary", dofs.boundary().len(), boundary.len())?;
    Ok(dofs.scatter(&interior, boundary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    /// `Ū_PBM⁽ⁱ⁺¹⁾`, full DOF vector.
    pub input: Vec<f64>,
    /// `r⁽ⁱ⁺¹⁾`, interior DOFs.
    pub target: Vec<f64>,
    pub alpha: f64,
    /// Level `i + 1` the sample predicts.
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdmSample {
    /// `Ǔ⁽ⁱ⁾`, full DOF vector.
    pub input: Vec<f64>,
    /// `Ǔ⁽ⁱ⁺¹⁾` on interior DOFs.
    pub target: Vec<f64>,
    pub alpha: f64,
    pub level: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSets {
    pub residual: Vec<ResidualSample>,
    pub ddm: Vec<DdmSample>,
}

impl TrainingSets {
    /// Residual samples whose α is in `alphas`, as a dataset.
    pub fn residual_dataset(&self, alphas: &[f64]) -> Result<Dataset> {
        let picked: Vec<_> = self.residual.iter().filter(|s| alphas.contains(&s.alpha)).collect();
        to_dataset(picked.iter().map(|s| (&s.input, &s.target)), picked.len())
    }

    pub fn ddm_dataset(&self, alphas: &[f64]) -> Result<Dataset> {
        let picked: Vec<_> = self.ddm.iter().filter(|s| alphas.contains(&s.alpha)).collect();
        to_dataset(picked.iter().map(|s| (&s.input, &s.target)), picked.len())
    }
}

fn to_dataset<'a>(pairs: impl Iterator<Item = (&'a Vec<f64>, &'a Vec<f64>)>, n: usize) -> Result<Dataset> {
    let mut pairs = pairs.peekable();
    let (wi, wt) = pairs.peek().map_or((0, 0), |(i, t)| (i.len(), t.len()));
    let mut x = Array2::zeros((n, wi));
    let mut y = Array2::zeros((n, wt));
    for (r, (i, t)) in pairs.enumerate() {
        check_len("sample input", wi, i.len())?;
        check_len("sample target", wt, t.len())?;
        x.row_mut(r).assign(&ndarray::ArrayView1::from(i.as_slice()));
        y.row_mut(r).assign(&ndarray::ArrayView1::from(t.as_slice()));
    }
    Dataset::new(x, y)
}

/// Residual and DDM samples for every level of every scenario, each step
/// starting from the exact history.
pub fn build_training_sets(stepper: &TimeStepper, scenarios: &[Scenario]) -> Result<TrainingSets> {
    let dofs = stepper.dofs();
    let mut sets = TrainingSets::default();
    for sc in scenarios {
        for i in 0..sc.steps() {
            let state = sc.exact_state(i);
            let rhs = stepper.rhs(&state, sc.load(i + 1))?;
            let g = sc.boundary(dofs, i + 1)?;
            let pbm = stepper.solve(&rhs, &g, None)?;
            let target = compute_residual(stepper, sc.exact(i + 1), &rhs)?;
            sets.residual.push(ResidualSample {
                input: pbm,
                target,
                alpha: sc.alpha(),
                level: i + 1,
            });
            sets.ddm.push(DdmSample {
                input: state.curr,
                target: dofs.gather_interior(sc.exact(i + 1)),
                alpha: sc.alpha(),
                level: i + 1,
            });
        }
    }
    Ok(sets)
}

/// Which stepper a rollout uses.
#[derive(Clone, Copy)]
pub enum Predictor<'a> {
    Pbm,
    Ddm(&'a dyn StateModel),
    Costa(&'a dyn ResidualModel),
}

impl Predictor<'_> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Predictor::Pbm => ModelKind::Pbm,
            Predictor::Ddm(_) => ModelKind::Ddm,
            Predictor::Costa(_) => ModelKind::Costa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// First level that could not be produced.
    pub level: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub alpha: f64,
    /// `Û⁽⁰⁾ … Û⁽ᴷ⁾`, truncated at divergence.
    pub states: Vec<Vec<f64>>,
    pub diverged: Option<Divergence>,
}

/// Runs `steps` levels from the exact initial data, each step feeding on
/// the previous prediction. Non-finite states end the trajectory early.
pub fn rollout(stepper: &TimeStepper, scenario: &Scenario, predictor: Predictor<'_>, steps: usize) -> Result<Trajectory> {
    if steps > scenario.steps() {
        return Err(Error::InvalidArgument(format!(
            "rollout of {steps} steps exceeds the {} available levels",
            scenario.steps()
        )));
    }
    let dofs = stepper.dofs();
    let mut state = scenario.exact_state(0);
    let mut traj = Trajectory {
        kind: predictor.kind(),
        alpha: scenario.alpha(),
        states: vec![state.curr.clone()],
        diverged: None,
    };
    for level in 1..=steps {
        let g = scenario.boundary(dofs, level)?;
        let load = scenario.load(level);
        let next = match predictor {
            Predictor::Pbm => pbm_predict(stepper, &state, load, &g),
            Predictor::Ddm(m) => ddm_step(stepper, &state.curr, &g, m),
            Predictor::Costa(m) => costa_step(stepper, &state, load, &g, level, m),
        };
        let next = match next {
            Ok(v) if v.iter().all(|x| x.is_finite()) => v,
            Ok(_) => {
                traj.diverged = Some(Divergence {
                    level,
                    reason: "non-finite state".into(),
                });
                break;
            }
            Err(Error::NonFinite(what)) => {
                traj.diverged = Some(Divergence {
                    level,
                    reason: format!("non-finite {what}"),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        traj.states.push(next.clone());
        state.advance(next);
    }
    Ok(traj)
}
