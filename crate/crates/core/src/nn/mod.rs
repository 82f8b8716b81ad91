//! Dense ReLU networks with exact backpropagation, optimizers selected by
//! name through [`OptimizerRegistry`], network-class bookkeeping and the
//! constructive multiplication network.

mod checkpoint;
mod class;
mod mlp;
mod mult;
mod optim;
mod schedule;

pub use checkpoint::{load_mlp, save_mlp, LayerRecord, MlpRecord, CHECKPOINT_VERSION};
pub use class::{
    class_stats, prescribe_architecture, worst_case_chart_count, ClassStats, NetworkClassParams,
    PrescriptionInputs, ScalingConstants,
};
pub use mlp::{Cache, Grads, Layer, Mlp};
pub use mult::{build_mult_network, mult_compositions};
pub use optim::{Adam, Optimizer, OptimizerConfig, OptimizerRegistry, Sgd};
pub use schedule::{Constant, Cosine, LrSchedule, ScheduleRegistry};
