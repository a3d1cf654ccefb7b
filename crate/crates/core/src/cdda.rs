//! Contrastive direction data augmentation.
//!
//! For every utterance `u1` in the corpus: draw a second target utterance
//! `u2` and a distractor `u3`, two target directions from the target set and
//! one direction from its complement, one room response per direction, and
//! mix all three. The paired reference carries only the two target
//! segments, so the distractor's speech must be suppressed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rir::Rir;
use crate::rng::{derive_seed, rng_from_seed};
use crate::scene::{schedule_segments, simulate_mix, MonoUtterance, MultiChannelAudio, SceneError, SceneSource, SceneSpec};
use crate::sdot::{build_reference, ReferenceSource, SerializedTranscript};
use crate::spatial::{Direction, DirectionSet, NUM_DIRECTIONS};
use crate::SAMPLE_RATE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CddaError {
    #[error("need at least {needed} utterances, got {got}")]
    InsufficientUtterances { needed: usize, got: usize },
    #[error("no room response for direction {0}")]
    MissingRirForDirection(Direction),
    #[error("target set must be non-empty and leave at least one distractor direction")]
    InvalidDirectionSet,
    #[error("distinct target directions requested but the target set has one direction")]
    CannotForceDistinct,
    #[error("example has no provenance")]
    ProvenanceMissing,
    #[error("utterance {0} referenced by provenance not found")]
    UnknownUtterance(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CddaConfig {
    pub direction_set: DirectionSet,
    /// Distractor gain range in dB relative to the unit target gain.
    pub distractor_gain_db: (f64, f64),
    pub seed: u64,
    pub overlap_ratio: f64,
    /// Silence between the two targets when `overlap_ratio` is zero.
    pub gap: usize,
    /// Require `u1 ≠ u2 ≠ u3` and `θ1 ≠ θ2`.
    pub force_distinct: bool,
}

impl Default for CddaConfig {
    fn default() -> Self {
        CddaConfig {
            direction_set: DirectionSet::default(),
            distractor_gain_db: (-10.0, 0.0),
            seed: 0,
            overlap_ratio: 0.0,
            gap: (SAMPLE_RATE / 5) as usize,
            force_distinct: false,
        }
    }
}

/// Room responses grouped by direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RirIndex {
    by_direction: [Vec<Rir>; NUM_DIRECTIONS],
}

impl RirIndex {
    pub fn new(rirs: impl IntoIterator<Item = Rir>) -> Self {
        let mut index = RirIndex::default();
        for r in rirs {
            index.by_direction[r.direction.index()].push(r);
        }
        index
    }

    pub fn get(&self, d: Direction) -> &[Rir] {
        &self.by_direction[d.index()]
    }

    pub fn find(&self, d: Direction, id: &str) -> Option<&Rir> {
        self.get(d).iter().find(|r| r.id == id)
    }

    pub fn all(&self) -> impl Iterator<Item = &Rir> {
        self.by_direction.iter().flatten()
    }
}

/// Everything needed to regenerate an example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `[u1, u2, u3]`; the last is the distractor.
    pub utterance_ids: [String; 3],
    pub directions: [Direction; 3],
    pub rir_ids: [String; 3],
    pub start_samples: [usize; 3],
    pub gains: [f64; 3],
}

impl Provenance {
    pub fn scene_spec(&self, overlap_ratio: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            sources: (0..3)
                .map(|i| SceneSource {
                    utterance_id: self.utterance_ids[i].clone(),
                    direction: self.directions[i],
                    start_sample: self.start_samples[i],
                    gain: self.gains[i],
                    rir_id: Some(self.rir_ids[i].clone()),
                })
                .collect(),
            overlap_ratio,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedExample {
    pub id: String,
    pub audio: MultiChannelAudio,
    pub reference: SerializedTranscript,
    pub provenance: Option<Provenance>,
}

fn validate(utterances: &[MonoUtterance], rirs: &RirIndex, config: &CddaConfig) -> Result<(), CddaError> {
    let needed = 3;
    if utterances.len() < needed {
        return Err(CddaError::InsufficientUtterances { needed, got: utterances.len() });
    }
    let (targets, distractors) = (config.direction_set.target(), config.direction_set.distractor());
    if targets.is_empty() || distractors.is_empty() {
        return Err(CddaError::InvalidDirectionSet);
    }
    if config.force_distinct && targets.len() < 2 {
        return Err(CddaError::CannotForceDistinct);
    }
    if let Some(d) = Direction::ALL.into_iter().find(|d| rirs.get(*d).is_empty()) {
        return Err(CddaError::MissingRirForDirection(d));
    }
    Ok(())
}

/// Draws the sources for the example anchored at utterance `index`.
pub fn plan_example(
    utterances: &[MonoUtterance],
    rirs: &RirIndex,
    config: &CddaConfig,
    index: usize,
) -> Result<Provenance, CddaError> {
    validate(utterances, rirs, config)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, index as u64));
    let n = utterances.len();
    let targets = config.direction_set.target();
    let distractors = config.direction_set.distractor();

    let i1 = index;
    let mut i2 = rng.random_range(0..n);
    while config.force_distinct && i2 == i1 {
        i2 = rng.random_range(0..n);
    }
    let mut i3 = rng.random_range(0..n);
    while config.force_distinct && (i3 == i1 || i3 == i2) {
        i3 = rng.random_range(0..n);
    }
    let t1 = targets[rng.random_range(0..targets.len())];
    let mut t2 = targets[rng.random_range(0..targets.len())];
    while config.force_distinct && t2 == t1 {
        t2 = targets[rng.random_range(0..targets.len())];
    }
    let t3 = distractors[rng.random_range(0..distractors.len())];
    let directions = [t1, t2, t3];
    let rir_ids = directions.map(|d| {
        let pool = rirs.get(d);
        pool[rng.random_range(0..pool.len())].id.clone()
    });

    let (u1, u2) = (&utterances[i1], &utterances[i2]);
    let starts = schedule_segments(&[u1.samples.len(), u2.samples.len()], config.overlap_ratio, config.gap);
    let span = (starts[0] + u1.samples.len()).max(starts[1] + u2.samples.len());
    let distractor_start = if span > 0 { rng.random_range(0..span) } else { 0 };
    let (lo, hi) = config.distractor_gain_db;
    let db = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let distractor_gain = libm::pow(10.0, db / 20.0);

    Ok(Provenance {
        utterance_ids: [u1.id.clone(), u2.id.clone(), utterances[i3].id.clone()],
        directions,
        rir_ids,
        start_samples: [starts[0], starts[1], distractor_start],
        gains: [1.0, 1.0, distractor_gain],
    })
}

/// Reference over the two target sources only, ordered by start time.
pub fn reference_for(provenance: &Provenance, utterances: &[MonoUtterance]) -> Result<SerializedTranscript, CddaError> {
    let sources = (0..2)
        .map(|i| {
            let u = lookup(utterances, &provenance.utterance_ids[i])?;
            Ok(ReferenceSource {
                direction: provenance.directions[i],
                start_sample: provenance.start_samples[i] as u64,
                transcript: u.transcript.clone(),
            })
        })
        .collect::<Result<Vec<_>, CddaError>>()?;
    Ok(build_reference(&sources, None).without_case_label())
}

fn lookup<'a>(utterances: &'a [MonoUtterance], id: &str) -> Result<&'a MonoUtterance, CddaError> {
    utterances.iter().find(|u| u.id == id).ok_or_else(|| CddaError::UnknownUtterance(id.to_string()))
}

fn simulate(provenance: &Provenance, utterances: &[MonoUtterance], rirs: &RirIndex, config: &CddaConfig) -> Result<MultiChannelAudio, CddaError> {
    let chosen: Vec<Rir> = (0..3)
        .map(|i| {
            rirs.find(provenance.directions[i], &provenance.rir_ids[i])
                .cloned()
                .ok_or(CddaError::MissingRirForDirection(provenance.directions[i]))
        })
        .collect::<Result<_, _>>()?;
    let spec = provenance.scene_spec(config.overlap_ratio, config.seed);
    Ok(simulate_mix(&spec, utterances, &chosen)?)
}

/// Builds the augmented example anchored at `utterances[index]`.
pub fn cdda_example(
    utterances: &[MonoUtterance],
    rirs: &RirIndex,
    config: &CddaConfig,
    index: usize,
) -> Result<AugmentedExample, CddaError> {
    let provenance = plan_example(utterances, rirs, config, index)?;
    let audio = simulate(&provenance, utterances, rirs, config)?;
    let reference = reference_for(&provenance, utterances)?;
    Ok(AugmentedExample {
        id: format!("cdda{index:06}"),
        audio,
        reference,
        provenance: Some(provenance),
    })
}

/// One augmented example per utterance, in corpus order.
pub fn cdda_generate(
    utterances: &[MonoUtterance],
    rirs: &RirIndex,
    config: &CddaConfig,
) -> Result<Vec<AugmentedExample>, CddaError> {
    validate(utterances, rirs, config)?;
    (0..utterances.len()).map(|i| cdda_example(utterances, rirs, config, i)).collect()
}

/// Outcome of one audit check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }
}

fn word_counts<'a>(words: impl Iterator<Item = &'a String>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for w in words {
        *m.entry(w.as_str()).or_insert(0) += 1;
    }
    m
}

/// Re-derives audio and reference from the provenance and checks the
/// augmentation invariants.
pub fn cdda_verify(
    example: &AugmentedExample,
    utterances: &[MonoUtterance],
    rirs: &RirIndex,
    config: &CddaConfig,
) -> Result<VerifyReport, CddaError> {
    let prov = example.provenance.as_ref().ok_or(CddaError::ProvenanceMissing)?;
    let mut report = VerifyReport::default();
    let set = &config.direction_set;
    let [t1, t2, t3] = prov.directions;

    report.push(
        "directions",
        set.is_target(t1) && set.is_target(t2) && !set.is_target(t3),
        format!("targets {t1}, {t2}; distractor {t3}"),
    );

    let leaked_tag = example.reference.segments.iter().any(|s| s.direction == t3);
    let u1 = lookup(utterances, &prov.utterance_ids[0])?;
    let u2 = lookup(utterances, &prov.utterance_ids[1])?;
    let expected_words = word_counts(u1.transcript.iter().chain(&u2.transcript));
    let actual_words = word_counts(example.reference.words());
    let leaked_words = actual_words != expected_words;
    report.push(
        "distractor_leak",
        !(leaked_tag || leaked_words),
        if leaked_tag || leaked_words { "distractor leaked into reference" } else { "clean" },
    );

    let rederived = reference_for(prov, utterances)?;
    report.push(
        "reference",
        rederived == example.reference,
        if rederived == example.reference { "matches" } else { "reference differs from provenance" },
    );

    let audio = simulate(prov, utterances, rirs, config)?;
    let same = audio == example.audio;
    report.push("waveform", same, if same { "bit-identical" } else { "waveform differs from re-simulation" });
    Ok(report)
}
