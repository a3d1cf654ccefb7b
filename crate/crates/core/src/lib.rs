//! Core algorithms for directional multi-talker speech processing.
//!
//! Everything in this crate is `no_std` (with `alloc`): the 12-direction
//! azimuth grid, image-source scene simulation, the fixed superdirective
//! beamformer bank, beam-energy localization and its linear classifier,
//! the direction-tagged serialized transcript format, contrastive direction
//! augmentation, and the scoring used to evaluate directional ASR output.
//!
//! File formats, WAV I/O and the command line live in the `dirspeech` crate.

#![no_std]

extern crate alloc;

pub mod beamformer;
pub mod cdda;
pub mod eval;
pub mod fft;
pub mod linalg;
pub mod localizer;
pub mod rir;
pub mod rng;
pub mod scene;
pub mod sdot;
pub mod spatial;
pub mod stft;
pub mod synth;

pub use beamformer::{BeamformerBank, BeamformerError};
pub use cdda::{AugmentedExample, CddaConfig, CddaError, RirIndex};
pub use eval::EvalError;
pub use localizer::{LinearLocalizer, LocalizerError};
pub use rir::{Rir, RirError, Room};
pub use scene::{AudioRole, MonoUtterance, MultiChannelAudio, SceneError, SceneSource, SceneSpec};
pub use sdot::{CaseLabel, SdotError, Segment, SerializedTranscript, TargetDirectionOutput};
pub use spatial::{ArrayGeometry, Direction, DirectionSet, Side, SpatialError};
pub use stft::StftConfig;

/// Sample rate used for every source and scene.
pub const SAMPLE_RATE: u32 = 16_000;
