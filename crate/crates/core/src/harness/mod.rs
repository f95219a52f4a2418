//! Experiment configuration, the coded Monte Carlo link, FER runs, offline
//! analyses and artifact output.

mod analysis;
mod config;
mod fer;
mod link;
mod output;

pub use analysis::{
    analyze_snr, build_luts, class_luts, run_gmi_analysis, run_table1, run_table1_with,
    search_dump, table1_scenario, train_offline_scheme, uncoded_dataset, uniform_factors,
    GmiAnalysis, SchemeAnalysis, Table1,
};
pub use config::{
    snr_key, AnalysisConfig, CodeConfig, PostScaling, ScalingMode, SimConfig, StoppingRule,
};
pub use fer::{
    run_fer_experiment, run_snr_point, wilson_interval, FactorAccuracy, FactorSign, MeanFactor,
    Provenance, ScenarioResult, SnrPoint, StopReason,
};
pub use link::{process_frame, receiver_for, CodedLink, Frame, FrameOutcome, Receiver};
pub use output::{snr_tag, Manifest};
