//! Evaluation harness: transfer to held-out ground sets, offline/online
//! experimental design with a linear probe, Zipf imbalance and feature
//! rankings.

mod design;
mod probe;
mod ranking;
mod report;
mod transfer;

pub use design::{
    class_incremental_order, dedup_exact, offline_design_eval, online_design_eval, zipf_duplicate,
    DesignSetup, Zipf,
};
pub use probe::{linear_probe, ProbeSettings};
pub use ranking::{feature_ranking_report, FeatureRanking, RankedItem};
pub use report::{ProbeReport, ProbeRow, ReportMeta, TransferReport, TransferRow};
pub use transfer::{normalized_fl_eval, transfer_eval, FlReference};
