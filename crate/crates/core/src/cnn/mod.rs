//! A small deterministic CNN engine in double precision: 3×3 convolutions
//! with ReLU, 2×2 max-pooling, dense layers, softmax cross-entropy and Adam.

mod adam;
pub mod checkpoint;
mod config;
pub mod layers;
mod model;
mod train;

pub use adam::adam_step;
pub use config::{BlockSpec, ModelConfig, TrainConfig};
pub use model::{
    forward, init_model, loss_and_grad, predict_batch, AdamState, Gradients, Model, ParamArray,
};
pub use train::{accuracy, train_model, DataView, EpochRecord};
