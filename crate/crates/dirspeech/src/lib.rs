//! Pipeline, file formats and command line around `dirspeech-core`.
//!
//! Artifacts live under one output directory: source and scene manifests
//! (JSON lines with a schema header), multichannel WAV files, the
//! beamformer bank, the localizer checkpoint, predictions and reports.

pub mod config;
pub mod error;
pub mod formats;
pub mod fsio;
pub mod manifest;
pub mod pipeline;
pub mod wav;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{Estimator, Evaluation, Pipeline, SceneSet};
