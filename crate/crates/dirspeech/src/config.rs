//! Pipeline configuration (TOML).

use std::path::{Path, PathBuf};

use dirspeech_core::beamformer::DEFAULT_LOADING;
use dirspeech_core::cdda::CddaConfig;
use dirspeech_core::eval::EvalConfig;
use dirspeech_core::localizer::TrainConfig;
use dirspeech_core::rir::{RirParams, Room};
use dirspeech_core::rng::{derive_seed, hash_str};
use dirspeech_core::spatial::{ArrayGeometry, DirectionSet};
use dirspeech_core::stft::StftConfig;
use dirspeech_core::SAMPLE_RATE;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::read_to_string;
use crate::wav::SampleFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; every stage derives its own from it.
    pub seed: u64,
    /// Output root, overridden by `--out` or `DIRSPEECH_OUT`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// TOML file with `mic_positions` and optional `speed_of_sound`;
    /// the 7-mic default when absent.
    #[serde(default)]
    pub geometry: Option<PathBuf>,
    #[serde(default)]
    pub target_directions: DirectionSet,
    #[serde(default)]
    pub wav_format: SampleFormat,
    #[serde(default)]
    pub stft: StftConfig,
    #[serde(default)]
    pub beamformer: BeamformerSection,
    #[serde(default)]
    pub rooms: RoomSets,
    #[serde(default)]
    pub rir: RirParams,
    #[serde(default)]
    pub sources: SourcesSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub cdda: CddaSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformerSection {
    pub loading: f64,
}

impl Default for BeamformerSection {
    fn default() -> Self {
        BeamformerSection { loading: DEFAULT_LOADING }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSets {
    pub seen: Vec<Room>,
    pub unseen: Vec<Room>,
}

impl Default for RoomSets {
    fn default() -> Self {
        RoomSets {
            seen: vec![
                Room::new("seen-a", [5.0, 4.0, 2.8], 0.6, 6),
                Room::new("seen-b", [6.5, 5.0, 3.0], 0.5, 6),
                Room::new("seen-c", [4.2, 3.6, 2.6], 0.7, 6),
            ],
            unseen: vec![Room::new("unseen-a", [7.5, 6.0, 3.2], 0.45, 6), Room::new("unseen-b", [4.8, 4.4, 2.7], 0.55, 6)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesSection {
    /// Source manifest; the synthetic smoke corpus when absent.
    pub manifest: Option<PathBuf>,
    pub smoke: SmokeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmokeSection {
    pub utterances: usize,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for SmokeSection {
    fn default() -> Self {
        SmokeSection { utterances: 60, min_words: 2, max_words: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub single_talker: usize,
    pub multi_talker: usize,
    pub overlap_ratio: f64,
    pub gap: usize,
    /// Keep the two speakers of a multi-talker scene at different directions.
    pub distinct_directions: bool,
    pub unseen_rooms: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            single_talker: 48,
            multi_talker: 24,
            overlap_ratio: 0.0,
            gap: (SAMPLE_RATE / 5) as usize,
            distinct_directions: true,
            unseen_rooms: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CddaSection {
    pub enabled: bool,
    pub distractor_gain_db: (f64, f64),
    pub overlap_ratio: f64,
    pub gap: usize,
    pub force_distinct: bool,
    pub rirs_per_direction: usize,
}

impl Default for CddaSection {
    fn default() -> Self {
        let d = CddaConfig::default();
        CddaSection {
            enabled: true,
            distractor_gain_db: d.distractor_gain_db,
            overlap_ratio: d.overlap_ratio,
            gap: d.gap,
            force_distinct: d.force_distinct,
            rirs_per_direction: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_scale: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection { learning_rate: t.learning_rate, epochs: t.epochs, batch_size: t.batch_size, init_scale: t.init_scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub content_threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { content_threshold: EvalConfig::default().content_threshold }
    }
}

impl PipelineConfig {
    /// Built-in configuration for the synthetic smoke dataset.
    pub fn smoke(seed: u64) -> Self {
        PipelineConfig {
            seed,
            out: None,
            geometry: None,
            target_directions: DirectionSet::default(),
            wav_format: SampleFormat::default(),
            stft: StftConfig::default(),
            beamformer: BeamformerSection::default(),
            rooms: RoomSets::default(),
            rir: RirParams::default(),
            sources: SourcesSection::default(),
            simulate: SimulateSection::default(),
            cdda: CddaSection::default(),
            training: TrainingSection::default(),
            eval: EvalSection::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|source| Error::Toml { path: origin.to_path_buf(), source })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")), path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Paths in the config are relative to this directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.target_directions.target().is_empty() || self.target_directions.distractor().is_empty() {
            return bad("target_directions must be a non-empty proper subset of the grid".into());
        }
        if self.rooms.seen.is_empty() {
            return bad("at least one seen room is required".into());
        }
        if self.simulate.unseen_rooms && self.rooms.unseen.is_empty() {
            return bad("unseen_rooms is set but no unseen rooms are configured".into());
        }
        for room in self.rooms.seen.iter().chain(&self.rooms.unseen) {
            room.validate()?;
        }
        for (name, r) in [("simulate", self.simulate.overlap_ratio), ("cdda", self.cdda.overlap_ratio)] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name}.overlap_ratio must lie in [0, 1), got {r}"));
            }
        }
        if self.cdda.rirs_per_direction == 0 {
            return bad("cdda.rirs_per_direction must be at least 1".into());
        }
        if self.sources.smoke.min_words == 0 || self.sources.smoke.min_words > self.sources.smoke.max_words {
            return bad("sources.smoke word range is empty".into());
        }
        for p in self.geometry.iter().chain(&self.sources.manifest) {
            let full = self.resolve(p);
            if !full.exists() {
                return bad(format!("referenced file {} does not exist", full.display()));
            }
        }
        self.array_geometry()?;
        Ok(())
    }

    pub fn array_geometry(&self) -> Result<ArrayGeometry> {
        match &self.geometry {
            None => Ok(ArrayGeometry::default()),
            Some(p) => {
                let path = self.resolve(p);
                let text = read_to_string(&path)?;
                toml::from_str(&text).map_err(|source| Error::Toml { path, source })
            }
        }
    }

    /// Seed for one stage.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, hash_str(stage))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.training.learning_rate,
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            seed: self.stage_seed("train"),
            init_scale: self.training.init_scale,
        }
    }

    pub fn cdda_config(&self) -> CddaConfig {
        CddaConfig {
            direction_set: self.target_directions.clone(),
            distractor_gain_db: self.cdda.distractor_gain_db,
            seed: self.stage_seed("augment"),
            overlap_ratio: self.cdda.overlap_ratio,
            gap: self.cdda.gap,
            force_distinct: self.cdda.force_distinct,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { content_threshold: self.eval.content_threshold }
    }
}
