//! Evaluation machinery: trace generation, noise injection, metrics,
//! replay validation and cross-validation.

pub mod generator;
pub mod metrics;
pub mod noise;
pub mod replay;
pub mod xval;

pub use generator::{generate_traces, Builtin, GeneratorSpec};
pub use metrics::{score_domain, score_model, DomainScore, Metrics};
pub use noise::{inject_noise, NoiseKind, NoiseSpec};
pub use replay::{replay_validate, ReplayFailure, ReplayOutcome};
pub use xval::{cross_validate, Ablation, FoldReport, XvalConfig};
