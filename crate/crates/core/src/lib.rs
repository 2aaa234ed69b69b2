//! Deep submodular peripteral networks: learning a submodular set function
//! from graded pairwise comparisons, plus the selection routines and the
//! evaluation harness built on top of it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod eval;
mod io_util;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod opt;
pub mod sampling;
pub mod setfn;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use loss::{LossKind, LossValue, PeripteralHyper};
pub use matrix::Matrix;
pub use model::{Checkpoint, DspnGradients, DspnModel, DspnObjective, ModelConfig};
pub use opt::GreedyTrace;
pub use sampling::{PairDataset, Provenance, SampledSet, SamplerConfig};
pub use setfn::{FacilityLocation, GroundSet, Matroid, SetFunction};
pub use train::{TrainConfig, TrainOutcome};
