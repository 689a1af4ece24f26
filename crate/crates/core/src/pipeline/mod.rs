//! End-to-end batch commands driven by a [`PipelineConfig`].

mod commands;
mod config;
mod report;

pub use commands::{encode, eval, stats, synth, train_kmeans, train_subword, utterance_mask_seed};
pub use config::{
    KMeansSection, MaskingConfig, PathsConfig, PipelineConfig, ReductionConfig, ReportConfig, RunConfig, SubwordSection,
};
pub use report::Report;
