//! Config-driven orchestration: one TOML file describes an experiment, and
//! each subcommand runs one stage of it against an output directory.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{
    cmd_ablate, cmd_cluster, cmd_evaluate, cmd_fuse, cmd_sweep, cmd_synth, cmd_train, load_ablation,
    load_cluster, load_frames, load_model, score_models, Artifact, ModelArtifact,
};
pub use config::{apply_override, ExperimentConfig, Provenance};
pub use pipeline::{load_inputs, prepare, Inputs, Prepared};
