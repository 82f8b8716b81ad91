//! Trainable chart autoencoder: a shared encoder emitting per-chart
//! coordinates and softmax chart weights, per-chart decoders, and a
//! weight-blended reconstruction trained against clean targets.

mod checkpoint;
mod distill;
mod eval;
mod model;
mod train;

pub use checkpoint::{load_model, save_model, CaeCheckpoint, CaeHeader};
pub use distill::{distill, oracle_targets, teacher_forced_error, OracleTargets};
pub use eval::{evaluate, EvalReport, PRUNE_FRACTION};
pub use model::{loss_and_grad, loss_mse, mean_squared_distance, CaeGrads, ChartAutoencoder, ForwardCache, Latent, DEFAULT_HIDDEN};
pub use train::{train, TrainConfig, TrainReport};
