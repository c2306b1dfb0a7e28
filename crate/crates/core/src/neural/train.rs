use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::MlpNetwork;
use super::normalizer::Normalizer;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Validation checks (one per epoch) without improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub const DEFAULT_BATCH: usize = 128;
    pub const DEFAULT_PATIENCE: usize = 20;
    pub const DEFAULT_MAX_EPOCHS: usize = 5000;

    pub fn new(learning_rate: f64, seed: u64) -> Self {
        Self {
            learning_rate,
            batch_size: Self::DEFAULT_BATCH,
            patience: Self::DEFAULT_PATIENCE,
            max_epochs: Self::DEFAULT_MAX_EPOCHS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {}", self.learning_rate)));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "patience, batch size, and max epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Paired input/target rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        check_len("dataset rows", inputs.nrows(), targets.nrows())?;
        Ok(Self { inputs, targets })
    }

    /// Stacks equal-length rows.
    pub fn from_rows(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        check_len("dataset rows", inputs.len(), targets.len())?;
        Self::new(stack(inputs)?, stack(targets)?)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }
}

fn stack(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * width);
    for r in rows {
        check_len("dataset row width", width, r.len())?;
        flat.extend_from_slice(r);
    }
    Ok(Array2::from_shape_vec((rows.len(), width), flat).expect("shape checked above"))
}

/// Patience counter over successive validation losses.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_check: usize,
    checks: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_check: 0,
            checks: 0,
            stale: 0,
        }
    }

    /// Records a check; returns whether it is a new best.
    pub fn observe(&mut self, loss: f64) -> bool {
        self.checks += 1;
        if loss < self.best {
            self.best = loss;
            self.best_check = self.checks;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// 1-based index of the best check.
    pub fn best_check(&self) -> usize {
        self.best_check
    }

    pub fn checks(&self) -> usize {
        self.checks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean minibatch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch.
    pub val_loss: Vec<f64>,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }

    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch - 1]
    }
}

/// Minibatch Adam on MSE with per-epoch validation; returns the snapshot
/// with the lowest validation loss.
pub fn train(mut net: MlpNetwork, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<(MlpNetwork, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be non-empty".into()));
    }
    for d in [train, val] {
        check_len("dataset input width", net.input_dim(), d.input_dim())?;
        check_len("dataset target width", net.output_dim(), d.output_dim())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(&net, cfg.learning_rate)?;
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = net.clone();
    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train.inputs.select(Axis(0), chunk);
            let y = train.targets.select(Axis(0), chunk);
            let (loss, grads) = net.gradient(x.view(), y.view())?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    reason: format!("training loss {loss}"),
                });
            }
            adam.step(&mut net, &grads).map_err(|e| Error::TrainingDiverged {
                epoch,
                reason: e.to_string(),
            })?;
            sum += loss * chunk.len() as f64;
        }
        report.train_loss.push(sum / train.len() as f64);

        let v = net.loss(val.inputs.view(), val.targets.view())?;
        if !v.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                reason: format!("validation loss {v}"),
            });
        }
        report.val_loss.push(v);
        if stopper.observe(v) {
            best.clone_from(&net);
        }
        if stopper.should_stop() {
            report.stopped_early = true;
            break;
        }
    }
    report.best_epoch = stopper.best_check();
    Ok((best, report))
}

/// A trained network wrapped with the normalizers of its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub net: MlpNetwork,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.input_norm.apply(x)?;
        let mut y = self.net.forward(&z)?;
        self.target_norm.invert_in_place(&mut y)?;
        Ok(y)
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.input_norm.apply_rows(x)?;
        let y = self.net.forward_batch(z.view())?;
        self.target_norm.invert_rows(y.view())
    }
}

/// Fits normalizers on `train`, initializes a He-uniform network of the given
/// hidden widths from `cfg.seed`, and trains it in normalized space.
pub fn fit_model(train_set: &Dataset, val_set: &Dataset, hidden: &[usize], cfg: &TrainConfig) -> Result<(TrainedModel, TrainReport)> {
    let input_norm = Normalizer::fit(train_set.inputs.view())?;
    let target_norm = Normalizer::fit(train_set.targets.view())?;
    let normalize = |d: &Dataset| -> Result<Dataset> {
        Dataset::new(input_norm.apply_rows(d.inputs.view())?, target_norm.apply_rows(d.targets.view())?)
    };
    let (tn, vn) = (normalize(train_set)?, normalize(val_set)?);

    let mut dims = vec![train_set.input_dim()];
    dims.extend_from_slice(hidden);
    dims.push(train_set.output_dim());
    let net = MlpNetwork::he_uniform(&dims, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let (net, report) = train(net, &tn, &vn, cfg)?;
    Ok((
        TrainedModel {
            net,
            input_norm,
            target_norm,
            config: cfg.clone(),
        },
        report,
    ))
}
