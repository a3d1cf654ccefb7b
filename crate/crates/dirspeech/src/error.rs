use std::path::PathBuf;

use dirspeech_core::beamformer::BeamformerError;
use dirspeech_core::cdda::CddaError;
use dirspeech_core::eval::EvalError;
use dirspeech_core::localizer::LocalizerError;
use dirspeech_core::rir::RirError;
use dirspeech_core::scene::SceneError;
use dirspeech_core::sdot::SdotError;
use dirspeech_core::spatial::SpatialError;
use dirspeech_core::stft::StftError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: hound::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("missing upstream artifact {0} (run the earlier stage first)")]
    MissingUpstreamArtifact(PathBuf),
    #[error("{path}: expected schema {expected}, found {found}")]
    SchemaMismatch { path: PathBuf, expected: String, found: String },
    #[error("{path}: duplicate id {id}")]
    DuplicateId { path: PathBuf, id: String },
    #[error("{path}: {reason}")]
    BadFormat { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0} item(s) could not be parsed")]
    UnparseableItems(usize),
    #[error("audio {path} has {actual} Hz, expected {expected} Hz")]
    SampleRate { path: PathBuf, expected: u32, actual: u32 },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Rir(#[from] RirError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Beamformer(#[from] BeamformerError),
    #[error(transparent)]
    Localizer(#[from] LocalizerError),
    #[error(transparent)]
    Sdot(#[from] SdotError),
    #[error(transparent)]
    Cdda(#[from] CddaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io { path: path.into(), source })
    }
}
