//! Pipeline stages. Each stage reads upstream artifacts from the output
//! directory, writes its own atomically, and records the hashes of what it
//! read in its manifest header.

use std::ops::Range;
use std::path::{Path, PathBuf};

use dirspeech_core::beamformer::{apply_bank, design_bank, BeamformerBank};
use dirspeech_core::cdda::{cdda_example, AugmentedExample, RirIndex};
use dirspeech_core::eval::{evaluate as score, render_report, EvalItem, EvalReport, Prediction, ReportFormat};
use dirspeech_core::localizer::{
    estimate_doa, extract_features, label_frames, train_localizer, BeamEnergyFeatures, EpochLog, FeatureVector,
    LabeledInterval, LinearLocalizer, NONE_CLASS,
};
use dirspeech_core::rir::{simulate_rir, Rir, Room};
use dirspeech_core::rng::{derive_seed, rng_from_seed};
use dirspeech_core::scene::{schedule_segments, simulate_mix, AudioRole, MonoUtterance, SceneSource, SceneSpec};
use dirspeech_core::sdot::{self, build_reference, CaseLabel, ReferenceSource, Segment, SerializedTranscript};
use dirspeech_core::spatial::{ArrayGeometry, Direction, NUM_DIRECTIONS};
use dirspeech_core::stft::StftConfig;
use dirspeech_core::synth::random_corpus;
use dirspeech_core::SAMPLE_RATE;
use rand::Rng;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::{read_bank, read_checkpoint, write_bank, write_checkpoint, write_train_log};
use crate::fsio::write_atomic;
use crate::manifest::{
    self, resolve, EvalRecord, Header, Manifest, SceneRecord, SceneSourceRecord, SourceRecord, BEAMS, PREDICTIONS,
    SCENES, SOURCES,
};
use crate::wav::{read_audio, read_utterance, write_audio};

pub const SOURCES_MANIFEST: &str = "sources.jsonl";
pub const SCENES_MANIFEST: &str = "scenes.jsonl";
pub const AUGMENTED_MANIFEST: &str = "augmented.jsonl";
pub const BANK_FILE: &str = "bank.bin";
pub const MODEL_FILE: &str = "model.json";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const PREDICTIONS_MANIFEST: &str = "predictions.jsonl";
pub const REPORT_TABLE: &str = "report.txt";
pub const REPORT_STRUCTURED: &str = "report.jsonl";

/// Which scene manifest a stage works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SceneSet {
    Scenes,
    Augmented,
}

impl SceneSet {
    pub fn manifest(self) -> &'static str {
        match self {
            SceneSet::Scenes => SCENES_MANIFEST,
            SceneSet::Augmented => AUGMENTED_MANIFEST,
        }
    }

    pub fn beams_manifest(self) -> String {
        format!("beams/{}", self.manifest())
    }

    fn dir(self) -> &'static str {
        match self {
            SceneSet::Scenes => "scenes",
            SceneSet::Augmented => "augmented",
        }
    }
}

/// How `localize` picks a direction for a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Estimator {
    /// Trained linear classifier with scene-level majority vote.
    #[default]
    Classifier,
    /// Beam-energy argmax.
    Energy,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub out: PathBuf,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// `jobs = 0` uses every available core.
    pub fn new(config: PipelineConfig, out: PathBuf, jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Pipeline { config, out, pool })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn sources_manifest_path(&self) -> PathBuf {
        match &self.config.sources.manifest {
            Some(p) => self.config.resolve(p),
            None => self.path(SOURCES_MANIFEST),
        }
    }

    /// Writes the synthetic smoke corpus unless a source manifest is
    /// configured.
    pub fn smoke_sources(&self) -> Result<usize> {
        if self.config.sources.manifest.is_some() {
            return Ok(0);
        }
        let s = &self.config.sources.smoke;
        let corpus = random_corpus(s.utterances, s.min_words, s.max_words, self.config.stage_seed("sources"));
        let format = self.config.wav_format;
        let records = self.pool.install(|| {
            corpus
                .par_iter()
                .map(|u| {
                    let rel = format!("sources/{}.wav", u.id);
                    write_audio(&self.path(&rel), std::slice::from_ref(&u.samples), u.sample_rate, format)?;
                    Ok(SourceRecord { id: u.id.clone(), wav_path: rel, transcript: u.transcript.clone() })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let n = records.len();
        Manifest { header: Header::new(SOURCES, "smoke"), records }.write(&self.path(SOURCES_MANIFEST))?;
        log::info!("wrote {n} smoke utterances");
        Ok(n)
    }

    pub fn load_sources(&self) -> Result<Vec<MonoUtterance>> {
        let path = self.sources_manifest_path();
        let m = Manifest::<SourceRecord>::read(&path, SOURCES)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        self.pool.install(|| {
            m.records
                .par_iter()
                .map(|r| read_utterance(&resolve(&base, &r.wav_path), &r.id, r.transcript.clone(), SAMPLE_RATE))
                .collect()
        })
    }

    fn rooms(&self) -> &[Room] {
        if self.config.simulate.unseen_rooms {
            &self.config.rooms.unseen
        } else {
            &self.config.rooms.seen
        }
    }

    /// Single- and multi-talker scenes.
    pub fn simulate(&self) -> Result<usize> {
        let utterances = self.load_sources()?;
        if utterances.is_empty() {
            return Err(Error::Config("source manifest is empty".into()));
        }
        let geometry = self.config.array_geometry()?;
        let sim = &self.config.simulate;
        let seed = self.config.stage_seed("simulate");
        let jobs: Vec<(usize, bool)> =
            (0..sim.single_talker).map(|i| (i, false)).chain((0..sim.multi_talker).map(|i| (i, true))).collect();
        let results = self.pool.install(|| {
            jobs.par_iter()
                .map(|&(i, multi)| {
                    let scene_seed = derive_seed(seed, (u64::from(multi) << 32) | i as u64);
                    let plan = if multi {
                        self.plan_multi(&utterances, i, scene_seed)
                    } else {
                        self.plan_single(&utterances, i, scene_seed)
                    };
                    self.render_scene(plan, &utterances, &geometry, scene_seed)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let n = results.len();
        let header = Header::new(SCENES, "simulate").with_input(&self.out, &self.sources_manifest_path())?;
        Manifest { header, records: results }.write(&self.path(SCENES_MANIFEST))?;
        log::info!("simulated {n} scenes");
        Ok(n)
    }

    fn plan_single(&self, utterances: &[MonoUtterance], i: usize, seed: u64) -> ScenePlan {
        let mut rng = rng_from_seed(seed);
        let direction = Direction::ALL[i % NUM_DIRECTIONS];
        let u = rng.random_range(0..utterances.len());
        let room = rng.random_range(0..self.rooms().len());
        ScenePlan { id: format!("st{i:04}"), room, sources: vec![(u, direction, 0)], target: None }
    }

    fn plan_multi(&self, utterances: &[MonoUtterance], i: usize, seed: u64) -> ScenePlan {
        let sim = &self.config.simulate;
        let mut rng = rng_from_seed(seed);
        let a = rng.random_range(0..utterances.len());
        let mut b = rng.random_range(0..utterances.len());
        while utterances.len() > 1 && b == a {
            b = rng.random_range(0..utterances.len());
        }
        let da = Direction::ALL[rng.random_range(0..NUM_DIRECTIONS)];
        let mut db = Direction::ALL[rng.random_range(0..NUM_DIRECTIONS)];
        while sim.distinct_directions && db == da {
            db = Direction::ALL[rng.random_range(0..NUM_DIRECTIONS)];
        }
        let starts = schedule_segments(
            &[utterances[a].samples.len(), utterances[b].samples.len()],
            sim.overlap_ratio,
            sim.gap,
        );
        // One request in six asks for an unoccupied direction.
        let target = if rng.random_range(0..6) == 0 {
            let free: Vec<Direction> = Direction::ALL.into_iter().filter(|d| *d != da && *d != db).collect();
            free[rng.random_range(0..free.len())]
        } else if rng.random_bool(0.5) {
            da
        } else {
            db
        };
        let room = rng.random_range(0..self.rooms().len());
        ScenePlan {
            id: format!("mt{i:04}"),
            room,
            sources: vec![(a, da, starts[0]), (b, db, starts[1])],
            target: Some(target),
        }
    }

    fn render_scene(
        &self,
        plan: ScenePlan,
        utterances: &[MonoUtterance],
        geometry: &ArrayGeometry,
        seed: u64,
    ) -> Result<SceneRecord> {
        let room = &self.rooms()[plan.room];
        let mut rirs: Vec<Rir> = Vec::new();
        let mut spec = SceneSpec { sources: Vec::new(), overlap_ratio: self.config.simulate.overlap_ratio, seed };
        let mut records = Vec::new();
        for (k, &(u, d, start)) in plan.sources.iter().enumerate() {
            let rir = simulate_rir(room, geometry, d, &self.config.rir, derive_seed(seed, k as u64))?;
            let utt = &utterances[u];
            spec.sources.push(SceneSource {
                utterance_id: utt.id.clone(),
                direction: d,
                start_sample: start,
                gain: 1.0,
                rir_id: Some(rir.id.clone()),
            });
            records.push(SceneSourceRecord {
                utt_id: utt.id.clone(),
                degrees: d,
                start_sample: start,
                num_samples: utt.samples.len(),
                gain: 1.0,
                transcript: utt.transcript.clone(),
                rir_id: Some(rir.id.clone()),
            });
            rirs.push(rir);
        }
        let audio = simulate_mix(&spec, utterances, &rirs)?;
        let rel = format!("scenes/{}.wav", plan.id);
        write_audio(&self.path(&rel), audio.channels(), audio.sample_rate(), self.config.wav_format)?;
        Ok(SceneRecord {
            scene_id: plan.id,
            wav_path: rel,
            sources: records,
            room_id: room.id.clone(),
            overlap_ratio: spec.overlap_ratio,
            target_degrees: plan.target,
            theta1: None,
            theta2: None,
            theta3: None,
            reference: None,
            provenance: None,
        })
    }

    /// Room responses for augmentation, drawn from the seen rooms.
    pub fn augmentation_rirs(&self) -> Result<RirIndex> {
        let geometry = self.config.array_geometry()?;
        let seed = self.config.stage_seed("augment-rirs");
        let rooms = &self.config.rooms.seen;
        let per = self.config.cdda.rirs_per_direction;
        let jobs: Vec<(Direction, usize)> =
            Direction::ALL.into_iter().flat_map(|d| (0..per).map(move |k| (d, k))).collect();
        let rirs = self.pool.install(|| {
            jobs.par_iter()
                .map(|&(d, k)| {
                    let room = &rooms[k % rooms.len()];
                    simulate_rir(room, &geometry, d, &self.config.rir, derive_seed(seed, (d.index() * per + k) as u64))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(RirIndex::new(rirs))
    }

    /// One augmented example per source utterance.
    pub fn augment(&self) -> Result<usize> {
        let utterances = self.load_sources()?;
        let rirs = self.augmentation_rirs()?;
        let cfg = self.config.cdda_config();
        let examples = self.pool.install(|| {
            (0..utterances.len())
                .into_par_iter()
                .map(|i| {
                    let ex = cdda_example(&utterances, &rirs, &cfg, i)?;
                    self.write_augmented(&ex, &utterances)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let n = examples.len();
        let header = Header::new(SCENES, "augment").with_input(&self.out, &self.sources_manifest_path())?;
        Manifest { header, records: examples }.write(&self.path(AUGMENTED_MANIFEST))?;
        log::info!("augmented {n} examples");
        Ok(n)
    }

    fn write_augmented(&self, ex: &AugmentedExample, utterances: &[MonoUtterance]) -> Result<SceneRecord> {
        let rel = format!("augmented/{}.wav", ex.id);
        write_audio(&self.path(&rel), ex.audio.channels(), ex.audio.sample_rate(), self.config.wav_format)?;
        let p = ex.provenance.clone().ok_or(dirspeech_core::cdda::CddaError::ProvenanceMissing)?;
        let sources = (0..3)
            .map(|k| {
                let u = utterances.iter().find(|u| u.id == p.utterance_ids[k]).expect("provenance names a corpus utterance");
                SceneSourceRecord {
                    utt_id: u.id.clone(),
                    degrees: p.directions[k],
                    start_sample: p.start_samples[k],
                    num_samples: u.samples.len(),
                    gain: p.gains[k],
                    transcript: u.transcript.clone(),
                    rir_id: Some(p.rir_ids[k].clone()),
                }
            })
            .collect();
        let room_id = p.rir_ids[0].split('/').next().unwrap_or_default().to_string();
        Ok(SceneRecord {
            scene_id: ex.id.clone(),
            wav_path: rel,
            sources,
            room_id,
            overlap_ratio: self.config.cdda.overlap_ratio,
            target_degrees: None,
            theta1: Some(p.directions[0]),
            theta2: Some(p.directions[1]),
            theta3: Some(p.directions[2]),
            reference: Some(sdot::serialize(&ex.reference)?),
            provenance: Some(p),
        })
    }

    pub fn design_beams(&self) -> Result<BeamformerBank> {
        let geometry = self.config.array_geometry()?;
        let bank = design_bank(&geometry, self.config.stft, self.config.beamformer.loading, SAMPLE_RATE)?;
        write_bank(&self.path(BANK_FILE), &bank)?;
        log::info!("designed {} beams over {} bins", bank.num_beams(), self.config.stft.num_bins());
        Ok(bank)
    }

    /// Filters every scene of `set` into 12 beams.
    pub fn beamform(&self, set: SceneSet) -> Result<usize> {
        let bank_path = self.path(BANK_FILE);
        let bank = read_bank(&bank_path)?;
        let manifest_path = self.path(set.manifest());
        let scenes = Manifest::<SceneRecord>::read(&manifest_path, SCENES)?;
        let records = self.pool.install(|| {
            scenes
                .records
                .par_iter()
                .map(|r| {
                    let audio = read_audio(&resolve(&self.out, &r.wav_path), AudioRole::ArrayCapture)?;
                    let beams = apply_bank(&bank, &audio)?;
                    let rel = format!("beams/{}/{}.wav", set.dir(), r.scene_id);
                    write_audio(&self.path(&rel), beams.channels(), beams.sample_rate(), self.config.wav_format)?;
                    Ok(SceneRecord { wav_path: rel, ..r.clone() })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let n = records.len();
        let beams_dir = self.path("beams");
        let header = Header::new(BEAMS, "beamform")
            .with_input(&beams_dir, &manifest_path)?
            .with_input(&beams_dir, &bank_path)?;
        Manifest { header, records }.write(&self.path(&set.beams_manifest()))?;
        log::info!("beamformed {n} scenes");
        Ok(n)
    }

    fn load_features(&self, set: SceneSet) -> Result<Vec<(SceneRecord, BeamEnergyFeatures)>> {
        let m = Manifest::<SceneRecord>::read(&self.path(&set.beams_manifest()), BEAMS)?;
        let stft = self.config.stft;
        self.pool.install(|| {
            m.records
                .into_par_iter()
                .map(|r| {
                    let audio = read_audio(&resolve(&self.out, &r.wav_path), AudioRole::Beamformed)?;
                    let f = extract_features(&audio, &stft)?;
                    Ok((r, f))
                })
                .collect()
        })
    }

    /// Trains the localizer on target-direction single-talker scenes, plus
    /// the augmented set when `with_cdda` is set.
    pub fn train(&self, with_cdda: bool) -> Result<(LinearLocalizer, Vec<EpochLog>)> {
        let targets = &self.config.target_directions;
        let mut data = Vec::new();
        for (r, f) in self.load_features(SceneSet::Scenes)? {
            if r.target_degrees.is_none() && r.sources.iter().all(|s| targets.is_target(s.degrees)) {
                data.extend(labeled_frames(&r, &f, &self.config.stft, |d| targets.is_target(d)));
            }
        }
        if with_cdda {
            for (r, f) in self.load_features(SceneSet::Augmented)? {
                data.extend(labeled_frames(&r, &f, &self.config.stft, |d| targets.is_target(d)));
            }
        }
        let (model, log) = train_localizer(&data, &self.config.train_config())?;
        write_checkpoint(&self.path(MODEL_FILE), &model)?;
        write_train_log(&self.path(TRAIN_LOG), &log)?;
        log::info!("trained on {} frames, final loss {:.4}", data.len(), log.last().map_or(f64::NAN, |e| e.loss));
        Ok((model, log))
    }

    /// Predictions for every beamformed scene. Transcripts are the oracle
    /// ones; only directions are estimated.
    pub fn localize(&self, estimator: Estimator) -> Result<usize> {
        let model_path = self.path(MODEL_FILE);
        let model = match estimator {
            Estimator::Classifier => Some(read_checkpoint(&model_path)?),
            Estimator::Energy => None,
        };
        let stft = self.config.stft;
        let targets = &self.config.target_directions;
        let mut records = Vec::new();
        for (r, f) in self.load_features(SceneSet::Scenes)? {
            let estimate = |s: &SceneSourceRecord| -> Option<Direction> {
                let range = frame_range(s.start_sample, s.start_sample + s.num_samples, &stft, f.num_frames());
                match &model {
                    Some(m) => {
                        let class = m.predict_scene(&f.frames[range]);
                        (class != NONE_CLASS).then(|| Direction::ALL[class])
                    }
                    None => estimate_doa(&f, range).ok(),
                }
            };
            let refs: Vec<ReferenceSource> = r
                .sources
                .iter()
                .map(|s| ReferenceSource { direction: s.degrees, start_sample: s.start_sample as u64, transcript: s.transcript.clone() })
                .collect();
            let predicted: Vec<Segment> = r
                .sources
                .iter()
                .filter_map(|s| {
                    estimate(s).map(|d| Segment { direction: d, tokens: s.transcript.clone(), start_time: s.start_sample as u64 })
                })
                .collect();
            let (reference, prediction) = match r.target_degrees {
                None => {
                    let reference = build_reference(&refs, None).without_case_label();
                    let prediction = SerializedTranscript { case_label: None, segments: predicted, terminated: true };
                    (reference, prediction)
                }
                Some(t) => {
                    let reference = build_reference(&refs, Some(&[t]));
                    let at_target = predicted.iter().filter(|s| s.direction == t).count();
                    let prediction = SerializedTranscript {
                        case_label: Some(CaseLabel::from_count(at_target)),
                        segments: predicted,
                        terminated: true,
                    };
                    (reference, prediction)
                }
            };
            let seen = r.target_degrees.or_else(|| r.sources.first().map(|s| s.degrees)).is_some_and(|d| targets.is_target(d));
            records.push(EvalRecord {
                id: r.scene_id.clone(),
                reference: sdot::serialize(&reference)?,
                prediction: sdot::serialize(&prediction)?,
                target_degrees: r.target_degrees,
                direction_seen: seen,
            });
        }
        let n = records.len();
        let mut header = Header::new(PREDICTIONS, "localize").with_input(&self.out, &self.path(&SceneSet::Scenes.beams_manifest()))?;
        if model.is_some() {
            header = header.with_input(&self.out, &model_path)?;
        }
        Manifest { header, records }.write(&self.path(PREDICTIONS_MANIFEST))?;
        Ok(n)
    }

    /// Scores a prediction manifest and writes both report renderings.
    pub fn evaluate(&self, manifest_path: Option<&Path>) -> Result<Evaluation> {
        let path = manifest_path.map_or_else(|| self.path(PREDICTIONS_MANIFEST), Path::to_path_buf);
        let eval = evaluate_manifest(&path, &self.config.eval_config())?;
        write_atomic(&self.path(REPORT_TABLE), eval.table.as_bytes())?;
        write_atomic(&self.path(REPORT_STRUCTURED), eval.structured.as_bytes())?;
        Ok(eval)
    }

    /// Every stage in order.
    pub fn run(&self, estimator: Estimator) -> Result<Evaluation> {
        self.smoke_sources()?;
        self.simulate()?;
        let cdda = self.config.cdda.enabled;
        if cdda {
            self.augment()?;
        }
        self.design_beams()?;
        self.beamform(SceneSet::Scenes)?;
        if cdda {
            self.beamform(SceneSet::Augmented)?;
        }
        if estimator == Estimator::Classifier {
            self.train(cdda)?;
        }
        self.localize(estimator)?;
        self.evaluate(None)
    }
}

struct ScenePlan {
    id: String,
    room: usize,
    /// (utterance index, direction, start sample)
    sources: Vec<(usize, Direction, usize)>,
    target: Option<Direction>,
}

/// Frames whose centre falls inside `[start, end)`; when none do, the frame
/// nearest the interval's midpoint.
pub fn frame_range(start: usize, end: usize, stft: &StftConfig, num_frames: usize) -> Range<usize> {
    let (hop, half) = (stft.hop(), stft.fft_size() / 2);
    let first = start.saturating_sub(half).div_ceil(hop);
    let last = if end > half { (end - 1 - half) / hop + 1 } else { 0 };
    let (first, last) = (first.min(num_frames), last.min(num_frames));
    if first < last {
        first..last
    } else {
        let mid = ((start + end) / 2).saturating_sub(half) / hop;
        let mid = mid.min(num_frames.saturating_sub(1));
        mid..(mid + 1).min(num_frames)
    }
}

/// Per-frame training pairs: frames covered by a target source get its
/// direction class, all other frames (silence, distractor-only) are "none".
pub fn labeled_frames(
    record: &SceneRecord,
    features: &BeamEnergyFeatures,
    stft: &StftConfig,
    is_target: impl Fn(Direction) -> bool,
) -> Vec<(FeatureVector, usize)> {
    let intervals: Vec<LabeledInterval> = record
        .sources
        .iter()
        .filter(|s| is_target(s.degrees))
        .map(|s| LabeledInterval { start: s.start_sample, end: s.start_sample + s.num_samples, class: s.degrees.index() })
        .collect();
    let labels = label_frames(features.num_frames(), stft, &intervals);
    features.frames.iter().copied().zip(labels).collect()
}

pub struct Evaluation {
    pub report: EvalReport,
    pub table: String,
    pub structured: String,
    /// Ids of records that failed to parse.
    pub unparseable: Vec<String>,
}

impl Evaluation {
    pub fn render(&self, format: ReportFormat) -> &str {
        match format {
            ReportFormat::Table => &self.table,
            ReportFormat::Structured => &self.structured,
        }
    }
}

fn parse_prediction(text: &str) -> Result<Prediction, sdot::SdotError> {
    if text.contains("°:") {
        sdot::parse_target_output(text).map(Prediction::Target)
    } else {
        sdot::parse(text).map(Prediction::Transcript)
    }
}

/// Scores every parseable record; unparseable ones are listed, not scored.
pub fn evaluate_manifest(path: &Path, config: &dirspeech_core::eval::EvalConfig) -> Result<Evaluation> {
    let (_, lines) = manifest::read_lines(path, PREDICTIONS)?;
    let mut items = Vec::new();
    let mut unparseable = Vec::new();
    for (line, text) in lines {
        let record: EvalRecord = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{}:{line}: {e}", path.display());
                unparseable.push(format!("line {line}"));
                continue;
            }
        };
        let parsed = sdot::parse(&record.reference).and_then(|reference| Ok((reference, parse_prediction(&record.prediction)?)));
        match parsed {
            Ok((reference, prediction)) => items.push(EvalItem {
                id: record.id,
                reference,
                prediction,
                target_direction: record.target_degrees,
                direction_seen: record.direction_seen,
            }),
            Err(e) => {
                log::error!("{}: item {}: {e}", path.display(), record.id);
                unparseable.push(record.id);
            }
        }
    }
    let report = score(&items, config)?;
    Ok(Evaluation {
        table: render_report(&report, ReportFormat::Table),
        structured: render_report(&report, ReportFormat::Structured),
        report,
        unparseable,
    })
}
