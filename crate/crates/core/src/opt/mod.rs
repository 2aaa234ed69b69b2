//! Maximization, streaming, minimization and baseline selection routines.
//!
//! All routines break ties toward the lowest item index.

mod baselines;
mod greedy;
mod minimize;
mod stream;

pub use baselines::{k_centers, random_subset, reservoir_sample};
pub use greedy::{greedy_max, GreedyTrace};
pub use minimize::submod_min_heuristic;
pub use stream::{streaming_max, StreamState, DEFAULT_STREAM_EPSILON};
