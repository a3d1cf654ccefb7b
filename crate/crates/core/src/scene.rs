//! Multichannel scene synthesis: convolution of mono sources with room
//! responses and time-aligned mixing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::convolve_many;
use crate::rir::Rir;
use crate::spatial::Direction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("no room response available for source {0} at {1}")]
    MissingRir(String, Direction),
    #[error("utterance {0} not found")]
    MissingUtterance(String),
    #[error("scene has no sources")]
    EmptyScene,
    #[error("source gain must be positive and finite, got {0}")]
    InvalidGain(f64),
    #[error("channels have unequal lengths")]
    RaggedChannels,
}

/// A single-channel source recording with its word transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonoUtterance {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub transcript: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioRole {
    ArrayCapture,
    Beamformed,
}

/// Equal-length channels at a common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelAudio {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
    role: AudioRole,
}

impl MultiChannelAudio {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32, role: AudioRole) -> Result<Self, SceneError> {
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(SceneError::RaggedChannels);
            }
        }
        Ok(MultiChannelAudio { channels, sample_rate, role })
    }

    pub fn silent(num_channels: usize, len: usize, sample_rate: u32, role: AudioRole) -> Self {
        MultiChannelAudio { channels: vec![vec![0.0; len]; num_channels], sample_rate, role }
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn role(&self) -> AudioRole {
        self.role
    }

    /// Adds `other` into `self` starting at sample `offset`, growing every
    /// channel as needed.
    pub fn add_at(&mut self, other: &MultiChannelAudio, offset: usize) {
        let new_len = self.len().max(offset + other.len());
        for (dst, src) in self.channels.iter_mut().zip(&other.channels) {
            dst.resize(new_len, 0.0);
            for (d, s) in dst[offset..].iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for x in self.channels.iter_mut().flatten() {
            *x *= factor;
        }
    }

    pub fn peak(&self) -> f64 {
        self.channels.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Convolves `utterance` with every channel of `rir`, scaled by `gain`.
pub fn apply_rir(utterance: &MonoUtterance, rir: &Rir, gain: f64) -> Result<MultiChannelAudio, SceneError> {
    if utterance.sample_rate != rir.sample_rate {
        return Err(SceneError::RateMismatch(utterance.sample_rate, rir.sample_rate));
    }
    let mut channels = convolve_many(&utterance.samples, &rir.taps);
    for x in channels.iter_mut().flatten() {
        *x *= gain;
    }
    MultiChannelAudio::new(channels, rir.sample_rate, AudioRole::ArrayCapture)
}

/// One placed source in a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSource {
    pub utterance_id: String,
    pub direction: Direction,
    pub start_sample: usize,
    pub gain: f64,
    /// Specific response to use; otherwise the first one for `direction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rir_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub sources: Vec<SceneSource>,
    pub overlap_ratio: f64,
    pub seed: u64,
}

/// Sum of every source's convolved signal placed at its start sample.
pub fn simulate_mix(
    spec: &SceneSpec,
    utterances: &[MonoUtterance],
    rirs: &[Rir],
) -> Result<MultiChannelAudio, SceneError> {
    let Some(first) = spec.sources.first() else {
        return Err(SceneError::EmptyScene);
    };
    let mut mix: Option<MultiChannelAudio> = None;
    for src in &spec.sources {
        if !src.gain.is_finite() {
            return Err(SceneError::InvalidGain(src.gain));
        }
        let utt = utterances
            .iter()
            .find(|u| u.id == src.utterance_id)
            .ok_or_else(|| SceneError::MissingUtterance(src.utterance_id.clone()))?;
        let rir = rirs
            .iter()
            .find(|r| match &src.rir_id {
                Some(id) => &r.id == id && r.direction == src.direction,
                None => r.direction == src.direction,
            })
            .ok_or_else(|| SceneError::MissingRir(src.utterance_id.clone(), src.direction))?;
        let wet = apply_rir(utt, rir, src.gain)?;
        match mix.as_mut() {
            Some(m) => {
                if m.sample_rate() != wet.sample_rate() {
                    return Err(SceneError::RateMismatch(m.sample_rate(), wet.sample_rate()));
                }
                m.add_at(&wet, src.start_sample);
            }
            None => {
                let mut m = MultiChannelAudio::silent(wet.num_channels(), 0, wet.sample_rate(), AudioRole::ArrayCapture);
                m.add_at(&wet, src.start_sample);
                mix = Some(m);
            }
        }
    }
    mix.ok_or(SceneError::MissingUtterance(first.utterance_id.clone()))
}

/// Start samples for consecutive utterances: each begins
/// `overlap_ratio · len` before the previous one ends (never before 0 or
/// before its predecessor); with zero overlap a `gap` separates them.
pub fn schedule_segments(lengths: &[usize], overlap_ratio: f64, gap: usize) -> Vec<usize> {
    let mut starts = Vec::with_capacity(lengths.len());
    let mut prev: Option<(usize, usize)> = None;
    for &len in lengths {
        let start = match prev {
            None => 0,
            Some((prev_start, prev_end)) => {
                let s = if overlap_ratio > 0.0 {
                    let overlap = libm::round(overlap_ratio * len as f64) as usize;
                    prev_end.saturating_sub(overlap)
                } else {
                    prev_end + gap
                };
                s.max(prev_start)
            }
        };
        starts.push(start);
        prev = Some((start, start + len));
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::convolve_direct;
    use crate::rir::{simulate_rir, Interpolation, Room, RirParams};
    use crate::spatial::ArrayGeometry;
    use alloc::string::ToString;

    fn dir(deg: i32) -> Direction {
        Direction::from_degrees(deg).unwrap()
    }

    fn utt(id: &str, samples: Vec<f64>) -> MonoUtterance {
        MonoUtterance { id: id.to_string(), samples, sample_rate: 16000, transcript: vec!["W".to_string()] }
    }

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn room_rir(direction: Direction) -> Rir {
        let room = Room::new("r", [5.0, 4.0, 3.0], 0.5, 3);
        simulate_rir(&room, &ArrayGeometry::default(), direction, &RirParams::default(), 1).unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule_segments(&[16000, 16000], 0.0, 0), [0, 16000]);
        assert_eq!(schedule_segments(&[16000, 16000], 0.25, 0), [0, 12000]);
        assert_eq!(schedule_segments(&[8000], 0.5, 100), [0]);
        assert_eq!(schedule_segments(&[100, 100, 50], 0.0, 10), [0, 110, 220]);
        // a long follower cannot start before its predecessor
        assert_eq!(schedule_segments(&[100, 10, 1000], 0.9, 0), [0, 91, 91]);
    }

    #[test]
    fn impulse_reproduces_taps() {
        let rir = room_rir(dir(30));
        let out = apply_rir(&utt("u", vec![1.0]), &rir, 0.5).unwrap();
        assert_eq!(out.len(), rir.len());
        for (ch, taps) in out.channels().iter().zip(&rir.taps) {
            for (a, b) in ch.iter().zip(taps) {
                assert_eq!(*a, 0.5 * b);
            }
        }
        let zero = apply_rir(&utt("u", noise(200, 1)), &rir, 0.0).unwrap();
        assert!(zero.channels().iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn rate_mismatch() {
        let rir = room_rir(dir(0));
        let mut u = utt("u", vec![1.0]);
        u.sample_rate = 8000;
        assert_eq!(apply_rir(&u, &rir, 1.0), Err(SceneError::RateMismatch(8000, 16000)));
    }

    #[test]
    fn anechoic_channels_are_delayed_copies() {
        let room = Room::new("free", [30.0, 30.0, 10.0], 0.5, 0);
        let params = RirParams { interpolation: Interpolation::Nearest, ..RirParams::default() };
        let g = ArrayGeometry::default();
        let rir = simulate_rir(&room, &g, dir(-60), &params, 0).unwrap();
        let x = noise(16000, 9);
        let out = apply_rir(&utt("u", x.clone()), &rir, 1.0).unwrap();
        let u = dir(-60).unit_vector();
        for (m, ch) in out.channels().iter().enumerate() {
            let p = g.mic_positions()[m];
            let proj = p[0] * u[0] + p[1] * u[1];
            let expected = (1.0 - proj) / 343.0 * 16000.0;
            let lag = (0..200)
                .max_by(|&a, &b| xcorr(ch, &x, a).total_cmp(&xcorr(ch, &x, b)))
                .unwrap();
            assert!((lag as f64 - expected).abs() <= 1.0, "mic {m}: {lag} vs {expected}");
        }
    }

    fn xcorr(y: &[f64], x: &[f64], lag: usize) -> f64 {
        x.iter().zip(&y[lag..]).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn mix_of_single_source_equals_apply_rir() {
        let rir = room_rir(dir(60));
        let u = utt("a", noise(500, 2));
        let spec = SceneSpec {
            sources: vec![SceneSource {
                utterance_id: "a".into(),
                direction: dir(60),
                start_sample: 0,
                gain: 1.0,
                rir_id: None,
            }],
            overlap_ratio: 0.0,
            seed: 0,
        };
        let mix = simulate_mix(&spec, core::slice::from_ref(&u), core::slice::from_ref(&rir)).unwrap();
        assert_eq!(mix, apply_rir(&u, &rir, 1.0).unwrap());
    }

    #[test]
    fn opposite_gains_cancel() {
        let rir = room_rir(dir(60));
        let u = utt("a", noise(700, 3));
        let src = |gain| SceneSource {
            utterance_id: "a".into(),
            direction: dir(60),
            start_sample: 40,
            gain,
            rir_id: None,
        };
        let spec = SceneSpec { sources: vec![src(0.7), src(-0.7)], overlap_ratio: 0.0, seed: 0 };
        let mix = simulate_mix(&spec, &[u], &[rir]).unwrap();
        assert!(mix.channels().iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn three_source_mix_matches_direct_summation() {
        let dirs = [dir(-30), dir(30), dir(120)];
        let rirs: Vec<Rir> = dirs.iter().map(|d| room_rir(*d)).collect();
        let utts: Vec<MonoUtterance> =
            (0..3).map(|i| utt(&alloc::format!("u{i}"), noise(300 + 100 * i, 10 + i as u64))).collect();
        let starts = [0usize, 350, 120];
        let gains = [1.0, 0.8, 0.4];
        let spec = SceneSpec {
            sources: (0..3)
                .map(|i| SceneSource {
                    utterance_id: utts[i].id.clone(),
                    direction: dirs[i],
                    start_sample: starts[i],
                    gain: gains[i],
                    rir_id: None,
                })
                .collect(),
            overlap_ratio: 0.0,
            seed: 0,
        };
        let mix = simulate_mix(&spec, &utts, &rirs).unwrap();
        let len = (0..3).map(|i| starts[i] + utts[i].samples.len() + rirs[i].len() - 1).max().unwrap();
        assert_eq!(mix.len(), len);
        for m in 0..7 {
            let mut oracle = vec![0.0; len];
            for i in 0..3 {
                for (k, v) in convolve_direct(&utts[i].samples, &rirs[i].taps[m]).iter().enumerate() {
                    oracle[starts[i] + k] += gains[i] * v;
                }
            }
            let energy: f64 = mix.channels()[m].iter().map(|x| x * x).sum();
            let oracle_energy: f64 = oracle.iter().map(|x| x * x).sum();
            assert!((energy - oracle_energy).abs() < 1e-9 * oracle_energy);
            for (a, b) in mix.channels()[m].iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mix_errors() {
        let spec = SceneSpec { sources: vec![], overlap_ratio: 0.0, seed: 0 };
        assert_eq!(simulate_mix(&spec, &[], &[]), Err(SceneError::EmptyScene));
        let spec = SceneSpec {
            sources: vec![SceneSource {
                utterance_id: "a".into(),
                direction: dir(90),
                start_sample: 0,
                gain: 1.0,
                rir_id: None,
            }],
            overlap_ratio: 0.0,
            seed: 0,
        };
        let rir = room_rir(dir(60));
        assert!(matches!(
            simulate_mix(&spec, &[utt("a", vec![1.0])], &[rir]),
            Err(SceneError::MissingRir(..))
        ));
    }
}
