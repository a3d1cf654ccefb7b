//! Direction-of-arrival estimation from beam energies.
//!
//! Two estimators share the same per-frame features: a parameter-free
//! energy argmax over beams, and a linear softmax classifier with an extra
//! "none" class that can learn to reject non-target directions.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::scene::MultiChannelAudio;
use crate::spatial::{Direction, DirectionSet, NUM_DIRECTIONS};
use crate::stft::StftConfig;

/// Floor added to frame energies before the logarithm.
pub const ENERGY_FLOOR: f64 = 1e-10;

/// 12 directions plus "none".
pub const NUM_CLASSES: usize = NUM_DIRECTIONS + 1;

/// Class index of "none / silence".
pub const NONE_CLASS: usize = NUM_DIRECTIONS;

pub type FeatureVector = [f64; NUM_DIRECTIONS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizerError {
    #[error("expected 12 beamformed channels, got {0}")]
    WrongChannelCount(usize),
    #[error("segment {start}..{end} selects no frames (have {frames})")]
    EmptySegment { start: usize, end: usize, frames: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label {0} outside 0..13")]
    InvalidLabel(usize),
    #[error("loss diverged at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("parameter array has {actual} values, expected {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
}

/// Per-frame beam energies of a beamformed recording.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamEnergyFeatures {
    /// `log(energy + δ)` with the per-frame mean removed.
    pub frames: Vec<FeatureVector>,
    /// Raw per-frame energies.
    pub energies: Vec<FeatureVector>,
}

impl BeamEnergyFeatures {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }
}

/// Number of analysis frames for `len` samples (the last frame is
/// zero-padded).
pub fn frame_count(len: usize, stft: &StftConfig) -> usize {
    let (n, hop) = (stft.fft_size(), stft.hop());
    match len {
        0 => 0,
        l if l <= n => 1,
        l => (l - n).div_ceil(hop) + 1,
    }
}

pub fn extract_features(
    beamformed: &MultiChannelAudio,
    stft: &StftConfig,
) -> Result<BeamEnergyFeatures, LocalizerError> {
    if beamformed.num_channels() != NUM_DIRECTIONS {
        return Err(LocalizerError::WrongChannelCount(beamformed.num_channels()));
    }
    let frames = frame_count(beamformed.len(), stft);
    let mut energies = Vec::with_capacity(frames);
    let mut normalized = Vec::with_capacity(frames);
    for t in 0..frames {
        let start = t * stft.hop();
        let mut e = [0.0; NUM_DIRECTIONS];
        for (slot, ch) in e.iter_mut().zip(beamformed.channels()) {
            let end = (start + stft.fft_size()).min(ch.len());
            *slot = ch[start..end].iter().map(|x| x * x).sum();
        }
        normalized.push(normalize_log(&e));
        energies.push(e);
    }
    Ok(BeamEnergyFeatures { frames: normalized, energies })
}

/// Mean-removed log energies.
pub fn normalize_log(energies: &FeatureVector) -> FeatureVector {
    let mut f = [0.0; NUM_DIRECTIONS];
    for (o, e) in f.iter_mut().zip(energies) {
        *o = libm::log(e + ENERGY_FLOOR);
    }
    let mean = f.iter().sum::<f64>() / NUM_DIRECTIONS as f64;
    for o in f.iter_mut() {
        *o -= mean;
    }
    f
}

/// Beam with the largest summed energy over `segment`; ties go to the lower
/// direction index.
pub fn estimate_doa(features: &BeamEnergyFeatures, segment: Range<usize>) -> Result<Direction, LocalizerError> {
    let frames = features.energies.len();
    let end = segment.end.min(frames);
    if segment.start >= end {
        return Err(LocalizerError::EmptySegment { start: segment.start, end: segment.end, frames });
    }
    let mut totals = [0.0; NUM_DIRECTIONS];
    for e in &features.energies[segment.start..end] {
        for (t, v) in totals.iter_mut().zip(e) {
            *t += v;
        }
    }
    Ok(Direction::ALL[argmax(&totals)])
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Half-width of the uniform initialization of weights and biases.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.5, epochs: 100, batch_size: 64, seed: 0, init_scale: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Softmax regression over beam-energy features: `p = softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLocalizer {
    /// Row-major `13 × 12`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearLocalizer {
    pub fn zeros() -> Self {
        LinearLocalizer { weights: vec![0.0; NUM_CLASSES * NUM_DIRECTIONS], bias: vec![0.0; NUM_CLASSES] }
    }

    pub fn from_parts(weights: Vec<f64>, bias: Vec<f64>) -> Result<Self, LocalizerError> {
        if weights.len() != NUM_CLASSES * NUM_DIRECTIONS {
            return Err(LocalizerError::ShapeMismatch {
                expected: NUM_CLASSES * NUM_DIRECTIONS,
                actual: weights.len(),
            });
        }
        if bias.len() != NUM_CLASSES {
            return Err(LocalizerError::ShapeMismatch { expected: NUM_CLASSES, actual: bias.len() });
        }
        Ok(LinearLocalizer { weights, bias })
    }

    fn random<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let mut draw = || if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
        let weights = (0..NUM_CLASSES * NUM_DIRECTIONS).map(|_| draw()).collect();
        let bias = (0..NUM_CLASSES).map(|_| draw()).collect();
        LinearLocalizer { weights, bias }
    }

    pub fn logits(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        let mut z = [0.0; NUM_CLASSES];
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * NUM_DIRECTIONS..(c + 1) * NUM_DIRECTIONS];
            *zc = self.bias[c] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        argmax(&self.logits(x))
    }

    /// Majority vote of per-frame predictions; ties go to the lower class
    /// index, and an empty scene is "none".
    pub fn predict_scene(&self, frames: &[FeatureVector]) -> usize {
        if frames.is_empty() {
            return NONE_CLASS;
        }
        let mut votes = [0.0; NUM_CLASSES];
        for f in frames {
            votes[self.predict(f)] += 1.0;
        }
        argmax(&votes)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Gradient of the mean cross-entropy with respect to weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy of `batch` and its analytic gradient.
pub fn loss_and_gradient(model: &LinearLocalizer, batch: &[(FeatureVector, usize)]) -> (f64, Gradient) {
    let mut grad = Gradient { weights: vec![0.0; model.weights.len()], bias: vec![0.0; NUM_CLASSES] };
    let mut loss = 0.0;
    let scale = 1.0 / batch.len().max(1) as f64;
    for (x, y) in batch {
        let p = model.probabilities(x);
        loss -= libm::log(p[*y]);
        for c in 0..NUM_CLASSES {
            let delta = (p[c] - if c == *y { 1.0 } else { 0.0 }) * scale;
            grad.bias[c] += delta;
            for (g, v) in grad.weights[c * NUM_DIRECTIONS..(c + 1) * NUM_DIRECTIONS].iter_mut().zip(x) {
                *g += delta * v;
            }
        }
    }
    (loss * scale, grad)
}

/// Mean cross-entropy and accuracy over a dataset.
pub fn evaluate(model: &LinearLocalizer, data: &[(FeatureVector, usize)]) -> (f64, f64) {
    if data.is_empty() {
        return (0.0, 0.0);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in data {
        let p = model.probabilities(x);
        loss -= libm::log(p[*y]);
        if argmax(&p) == *y {
            correct += 1;
        }
    }
    (loss / data.len() as f64, correct as f64 / data.len() as f64)
}

/// Mini-batch gradient descent on the mean cross-entropy. Deterministic for
/// a given dataset order and `config.seed`.
pub fn train_localizer(
    data: &[(FeatureVector, usize)],
    config: &TrainConfig,
) -> Result<(LinearLocalizer, Vec<EpochLog>), LocalizerError> {
    if data.is_empty() {
        return Err(LocalizerError::EmptyDataset);
    }
    if let Some((_, y)) = data.iter().find(|(_, y)| *y >= NUM_CLASSES) {
        return Err(LocalizerError::InvalidLabel(*y));
    }
    let mut rng = rng_from_seed(config.seed);
    let mut model = LinearLocalizer::random(&mut rng, config.init_scale);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch_size = config.batch_size.max(1);
    let mut log = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let (loss, grad) = loss_and_gradient(&model, &batch);
            if !loss.is_finite() {
                return Err(LocalizerError::NonFiniteLoss(epoch));
            }
            for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
                *b -= config.learning_rate * g;
            }
        }
        let (loss, accuracy) = evaluate(&model, data);
        if !loss.is_finite() || !model.is_finite() {
            return Err(LocalizerError::NonFiniteLoss(epoch));
        }
        log.push(EpochLog { epoch, loss, accuracy });
    }
    Ok((model, log))
}

/// Fraction of scenes whose majority-vote class is "none" or a distractor
/// direction. An empty scene list yields 1.0.
pub fn reject_rate(model: &LinearLocalizer, scenes: &[Vec<FeatureVector>], directions: &DirectionSet) -> f64 {
    if scenes.is_empty() {
        return 1.0;
    }
    let rejected = scenes
        .iter()
        .filter(|frames| {
            let class = model.predict_scene(frames);
            class == NONE_CLASS || !directions.is_target(Direction::ALL[class])
        })
        .count();
    rejected as f64 / scenes.len() as f64
}

/// Active interval of one source, in samples, with its class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledInterval {
    pub start: usize,
    pub end: usize,
    pub class: usize,
}

/// Frame labels: the interval covering the largest part of each frame if it
/// covers at least half of it, otherwise "none".
pub fn label_frames(num_frames: usize, stft: &StftConfig, intervals: &[LabeledInterval]) -> Vec<usize> {
    (0..num_frames)
        .map(|t| {
            let fs = t * stft.hop();
            let fe = fs + stft.fft_size();
            let mut best = (0usize, NONE_CLASS);
            for iv in intervals {
                let overlap = fe.min(iv.end).saturating_sub(fs.max(iv.start));
                if overlap > best.0 {
                    best = (overlap, iv.class);
                }
            }
            if best.0 * 2 >= stft.fft_size() {
                best.1
            } else {
                NONE_CLASS
            }
        })
        .collect()
}
