//! Dense feedforward surrogates: network, optimizer, normalization,
//! training loop, and checkpoints.

mod adam;
pub mod checkpoint;
mod mlp;
mod normalizer;
mod train;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use checkpoint::{load_model, read_model, save_model, write_model};
pub use mlp::{architecture, DenseLayer, MlpNetwork, HIDDEN_LAYERS, LEAK};
pub use normalizer::Normalizer;
pub use train::{fit_model, train, Dataset, EarlyStopping, TrainConfig, TrainReport, TrainedModel};
