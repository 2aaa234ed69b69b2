//! Deep submodular peripteral network: pillar → matroid-rank aggregation → roof.

mod activation;
mod checkpoint;
mod dspn;
mod pillar;
mod roof;

pub use activation::{activation_bank, logistic, softplus, Concave, PillarOutput, ALL_CONCAVE};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use dspn::{
    aggregate, dspn_backward, dspn_eval, DspnGradients, DspnModel, DspnObjective, Evaluator,
    ModelConfig,
};
pub use pillar::{pillar_forward, DenseLayer, PillarParams};
pub use roof::{dsf_eval, project_nonneg, project_nonneg_in_place, RoofParams};
