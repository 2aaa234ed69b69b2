//! Synthetic data, embedding/label files and run configuration.

mod config;
mod files;
mod synthetic;

pub use config::{parse_config, ConfigKey, KeyKind, RunConfig, SCHEMA};
pub use files::{
    load_embeddings, load_ground, load_labels, save_embeddings, save_embeddings_tsv, save_labels,
    EMBEDDINGS_MAGIC,
};
pub use synthetic::{gen_split, gen_synthetic, SyntheticSpec};
