//! Experiment orchestration: datasets, training over seeds, rollouts, and
//! RRMSE bookkeeping.

mod metrics;
mod output;

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{
    aggregate_series, aggregate_stats, mean_std, outcomes, rrmse, series_stats, significance_curve,
    significance_series, AggregateRow, Aggregates, CurvePoint, GroupBy, ModelCounts, RrmseRecord, ScenarioKey,
    ScenarioOutcome, SeriesStats,
};
pub use output::{emit_results, models_in, read_records, write_records, DesignSwitches, RunMetadata, PLOTS_DIR, RECORDS_FILE, RESULTS_FILE};

use crate::error::{Error, Result};
use crate::fem::{FemOperators, LoadQuadrature, TimeStepper};
use crate::hybrid::{build_training_sets, rollout, ModelKind, ModelingError, Predictor, Scenario, Trajectory};
use crate::manufactured::{AlphaSplit, CaseLabel, ManufacturedCase};
use crate::material::ElasticMaterial;
use crate::mesh::GridMesh;
use crate::neural::{fit_model, TrainConfig, TrainReport, TrainedModel, HIDDEN_LAYERS};

/// Modeling error synthesized by each experiment.
pub fn experiment_mode(experiment: u8) -> Result<ModelingError> {
    match experiment {
        1 => Ok(ModelingError::None),
        2 => Ok(ModelingError::ZeroLoad),
        3 => Ok(ModelingError::DimensionReduced),
        4 => Ok(ModelingError::Linearized),
        other => Err(Error::InvalidArgument(format!("experiment must be 1–4, got {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: u8,
    pub solutions: Vec<CaseLabel>,
    /// Elements per axis.
    pub elements: usize,
    /// Time steps `K` over `t ∈ [0, 1]`.
    pub steps: usize,
    /// Seeds `0..seeds` for network initialization and shuffling.
    pub seeds: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub alphas: AlphaSplit,
    /// Concurrent units; 0 uses every available core.
    pub workers: usize,
}

impl ExperimentSpec {
    /// Full-scale settings for an experiment.
    pub fn defaults(experiment: u8) -> Result<Self> {
        let mode = experiment_mode(experiment)?;
        let solutions = match mode {
            ModelingError::None | ModelingError::ZeroLoad => vec![CaseLabel::E1, CaseLabel::E2, CaseLabel::E3],
            ModelingError::DimensionReduced => vec![CaseLabel::Ed1, CaseLabel::Ed2, CaseLabel::Ed3],
            ModelingError::Linearized => vec![CaseLabel::N1, CaseLabel::N2, CaseLabel::N3],
        };
        let linearized = mode == ModelingError::Linearized;
        Ok(Self {
            experiment,
            solutions,
            elements: if linearized { 10 } else { 15 },
            steps: if linearized { 500 } else { 1000 },
            seeds: if linearized { 5 } else { 10 },
            learning_rate: if linearized { 8e-5 } else { 1e-5 },
            batch_size: TrainConfig::DEFAULT_BATCH,
            patience: TrainConfig::DEFAULT_PATIENCE,
            max_epochs: TrainConfig::DEFAULT_MAX_EPOCHS,
            alphas: AlphaSplit::standard(),
            workers: 0,
        })
    }

    pub fn mode(&self) -> Result<ModelingError> {
        experiment_mode(self.experiment)
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        if self.solutions.is_empty() {
            return Err(Error::InvalidArgument("no solutions selected".into()));
        }
        for &s in &self.solutions {
            mode.check_case(&ManufacturedCase::new(s))?;
        }
        if self.elements == 0 || self.steps == 0 {
            return Err(Error::InvalidArgument("elements and steps must be positive".into()));
        }
        self.alphas.validate()?;
        if self.alphas.test.is_empty() {
            return Err(Error::InvalidArgument("no test α values".into()));
        }
        self.train_config(0).validate()
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            patience: self.patience,
            max_epochs: self.max_epochs,
            seed,
        }
    }

    /// `cases · α_test · K · (1 + 2·seeds)`.
    pub fn expected_records(&self) -> usize {
        self.solutions.len() * self.alphas.test.len() * self.steps * (1 + 2 * self.seeds as usize)
    }
}

/// Summary of one trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub solution: CaseLabel,
    pub model: ModelKind,
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub final_train_loss: f64,
    pub stopped_early: bool,
}

impl TrainingSummary {
    fn new(solution: CaseLabel, model: ModelKind, seed: u64, r: &TrainReport) -> Self {
        Self {
            solution,
            model,
            seed,
            epochs: r.epochs(),
            best_epoch: r.best_epoch,
            best_val_loss: r.best_val_loss(),
            final_train_loss: r.train_loss.last().copied().unwrap_or(f64::NAN),
            stopped_early: r.stopped_early,
        }
    }
}

/// A unit that did not complete: failed training or a diverged rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitFailure {
    pub solution: CaseLabel,
    pub model: ModelKind,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct TrainedPair {
    pub solution: CaseLabel,
    pub seed: u64,
    pub ddm: TrainedModel,
    pub costa: TrainedModel,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    /// Canonical order: solution, α, model, seed, step.
    pub records: Vec<RrmseRecord>,
    pub training: Vec<TrainingSummary>,
    pub failures: Vec<UnitFailure>,
    pub models: Vec<TrainedPair>,
}

/// Progress sink; the library itself never prints.
pub type Progress<'a> = &'a (dyn Fn(&str) + Sync);

fn trajectory_records(
    spec: &ExperimentSpec,
    solution: CaseLabel,
    scenario: &Scenario,
    traj: &Trajectory,
    seed: Option<u64>,
) -> Result<Vec<RrmseRecord>> {
    (1..=spec.steps)
        .map(|step| {
            let value = match traj.states.get(step) {
                Some(u) => rrmse(u, scenario.exact(step))?,
                None => f64::INFINITY,
            };
            Ok(RrmseRecord {
                experiment: spec.experiment,
                solution,
                alpha: scenario.alpha(),
                model: traj.kind,
                seed,
                step,
                time: scenario.time(step),
                rrmse: value,
            })
        })
        .collect()
}

fn failed_records(spec: &ExperimentSpec, solution: CaseLabel, sc: &Scenario, model: ModelKind, seed: u64) -> Vec<RrmseRecord> {
    (1..=spec.steps)
        .map(|step| RrmseRecord {
            experiment: spec.experiment,
            solution,
            alpha: sc.alpha(),
            model,
            seed: Some(seed),
            step,
            time: sc.time(step),
            rrmse: f64::INFINITY,
        })
        .collect()
}

struct CaseContext {
    stepper: TimeStepper,
    train_val: Vec<Scenario>,
    test: Vec<Scenario>,
}

fn prepare_case(spec: &ExperimentSpec, label: CaseLabel, mesh: &GridMesh, quad: &LoadQuadrature) -> Result<CaseContext> {
    let mode = spec.mode()?;
    let case = ManufacturedCase::new(label);
    let ops = FemOperators::assemble(mesh, &ElasticMaterial::REFERENCE, 1.0 / spec.steps as f64)?;
    let stepper = TimeStepper::new(ops)?;
    let build = |alphas: &[f64]| -> Result<Vec<Scenario>> {
        alphas
            .par_iter()
            .map(|&a| Scenario::build(mesh, quad, case, a, spec.steps, mode))
            .collect()
    };
    let mut fit_alphas = spec.alphas.train.clone();
    fit_alphas.extend_from_slice(&spec.alphas.val);
    Ok(CaseContext {
        train_val: build(&fit_alphas)?,
        test: build(&spec.alphas.test)?,
        stepper,
    })
}

enum SeedResult {
    Trained(Box<(TrainedModel, TrainReport)>),
    Failed(String),
}

/// Trains, rolls out, and scores every model on every test scenario.
///
/// Work is spread over (solution, seed) units on a pool of `spec.workers`
/// threads; the output order does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec, keep_models: bool, progress: Progress<'_>) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if spec.workers > 0 {
        pool = pool.num_threads(spec.workers);
    }
    let pool = pool.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(spec, keep_models, progress))
}

fn run_inner(spec: &ExperimentSpec, keep_models: bool, progress: Progress<'_>) -> Result<ExperimentOutput> {
    let mesh = GridMesh::new(spec.elements, spec.elements)?;
    let quad = LoadQuadrature::new(&mesh)?;
    let mut out = ExperimentOutput::default();

    for &label in &spec.solutions {
        progress(&format!("{label}: building scenarios"));
        let ctx = prepare_case(spec, label, &mesh, &quad)?;
        let sets = build_training_sets(&ctx.stepper, &ctx.train_val)?;
        let residual_train = sets.residual_dataset(&spec.alphas.train)?;
        let residual_val = sets.residual_dataset(&spec.alphas.val)?;
        let ddm_train = sets.ddm_dataset(&spec.alphas.train)?;
        let ddm_val = sets.ddm_dataset(&spec.alphas.val)?;
        drop(sets);

        let pbm: Vec<Trajectory> = ctx
            .test
            .par_iter()
            .map(|sc| rollout(&ctx.stepper, sc, Predictor::Pbm, spec.steps))
            .collect::<Result<_>>()?;

        let done = Mutex::new(0usize);
        let units: Vec<(u64, ModelKind)> = (0..spec.seeds)
            .flat_map(|s| [(s, ModelKind::Ddm), (s, ModelKind::Costa)])
            .collect();
        let trained: Vec<SeedResult> = units
            .par_iter()
            .map(|&(seed, kind)| {
                let (train, val) = match kind {
                    ModelKind::Ddm => (&ddm_train, &ddm_val),
                    _ => (&residual_train, &residual_val),
                };
                let r = match fit_model(train, val, &HIDDEN_LAYERS, &spec.train_config(seed)) {
                    Ok(m) => SeedResult::Trained(Box::new(m)),
                    Err(e) => SeedResult::Failed(e.to_string()),
                };
                let mut d = done.lock().expect("progress counter");
                *d += 1;
                progress(&format!("{label}: trained {kind} seed {seed} ({}/{})", *d, units.len()));
                r
            })
            .collect();

        // One rollout batch per (seed, model), all test α.
        let rollouts: Vec<Result<Vec<Trajectory>>> = units
            .par_iter()
            .zip(&trained)
            .map(|(&(_, kind), t)| match t {
                SeedResult::Trained(m) => ctx
                    .test
                    .iter()
                    .map(|sc| {
                        let p = match kind {
                            ModelKind::Ddm => Predictor::Ddm(&m.0),
                            _ => Predictor::Costa(&m.0),
                        };
                        rollout(&ctx.stepper, sc, p, spec.steps)
                    })
                    .collect(),
                SeedResult::Failed(_) => Ok(Vec::new()),
            })
            .collect();

        for (ai, sc) in ctx.test.iter().enumerate() {
            out.records.extend(trajectory_records(spec, label, sc, &pbm[ai], None)?);
            if let Some(d) = &pbm[ai].diverged {
                out.failures.push(UnitFailure {
                    solution: label,
                    model: ModelKind::Pbm,
                    seed: None,
                    alpha: Some(sc.alpha()),
                    message: format!("diverged at step {}: {}", d.level, d.reason),
                });
            }
            for kind in [ModelKind::Ddm, ModelKind::Costa] {
                for seed in 0..spec.seeds {
                    let u = units.iter().position(|&x| x == (seed, kind)).expect("unit exists");
                    match (&trained[u], &rollouts[u]) {
                        (SeedResult::Trained(_), Ok(trajs)) => {
                            let traj = &trajs[ai];
                            out.records.extend(trajectory_records(spec, label, sc, traj, Some(seed))?);
                            if let Some(d) = &traj.diverged {
                                out.failures.push(UnitFailure {
                                    solution: label,
                                    model: kind,
                                    seed: Some(seed),
                                    alpha: Some(sc.alpha()),
                                    message: format!("diverged at step {}: {}", d.level, d.reason),
                                });
                            }
                        }
                        (SeedResult::Trained(_), Err(e)) => return Err(Error::InvalidArgument(e.to_string())),
                        (SeedResult::Failed(_), _) => out.records.extend(failed_records(spec, label, sc, kind, seed)),
                    }
                }
            }
        }

        for (&(seed, kind), t) in units.iter().zip(&trained) {
            match t {
                SeedResult::Trained(m) => out.training.push(TrainingSummary::new(label, kind, seed, &m.1)),
                SeedResult::Failed(msg) => out.failures.push(UnitFailure {
                    solution: label,
                    model: kind,
                    seed: Some(seed),
                    alpha: None,
                    message: format!("training failed: {msg}"),
                }),
            }
        }
        if keep_models {
            let mut it = trained.into_iter();
            for seed in 0..spec.seeds {
                if let (Some(SeedResult::Trained(d)), Some(SeedResult::Trained(c))) = (it.next(), it.next()) {
                    out.models.push(TrainedPair {
                        solution: label,
                        seed,
                        ddm: d.0,
                        costa: c.0,
                    });
                }
            }
        }
    }
    Ok(out)
}
