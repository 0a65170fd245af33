//! Minimal CNN engine: layers with hand-written gradients, Adam, and a
//! training loop. Single-example tensors are `[height, width, channels]`.

pub mod adam;
pub(crate) mod gemm;
pub mod kfold;
pub mod loss;
pub mod model;
pub mod ops;
pub mod serialize;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use kfold::kfold_split;
pub use loss::{bce_loss, mse_loss, LossKind};
pub use model::{build_classifier, build_denoiser, ActivationFn, LayerSpec, Model};
pub use serialize::{load_model, model_from_bytes, model_to_bytes, save_model, MAGIC};
pub use tensor::Tensor;
pub use train::{evaluate, train, train_with_progress, EpochRecord, Example, History, TrainConfig};
