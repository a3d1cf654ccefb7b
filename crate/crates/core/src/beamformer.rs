//! Fixed superdirective beamformer bank, one beam per grid direction.
//!
//! Each beam is the distortionless minimum-variance solution against a
//! spherically isotropic (diffuse) noise field,
//!
//! ```text
//! w(f) = (Γ(f) + εI)⁻¹ d(f) / (d(f)ᴴ (Γ(f) + εI)⁻¹ d(f))
//! Γ_ij(f) = sin(2πf‖p_i − p_j‖/c) / (2πf‖p_i − p_j‖/c)
//! ```
//!
//! with far-field steering `d_m(f) = exp(j2πf pₘ·u/c)`. `Γ + εI` is real,
//! symmetric and positive definite for `ε > 0`, so the solve is a real
//! Cholesky applied to the real and imaginary parts of `d`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{cholesky, cholesky_solve};
use crate::scene::{AudioRole, MultiChannelAudio};
use crate::spatial::{ArrayGeometry, Direction, NUM_DIRECTIONS};
use crate::stft::{Spectrogram, Stft, StftConfig};

/// Default diagonal loading relative to the mean diagonal of `Γ`.
pub const DEFAULT_LOADING: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamformerError {
    #[error("diagonal loading must be positive and finite, got {0}")]
    InvalidLoading(f64),
    #[error("loaded coherence matrix is not positive definite at {0} Hz")]
    SingularCoherence(f64),
    #[error("expected {expected} input channels, got {actual}")]
    ChannelCountMismatch { expected: usize, actual: usize },
    #[error("sample rate mismatch: bank designed for {expected} Hz, audio is {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },
    #[error("frequency {freq} Hz outside [0, {nyquist}] Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },
    #[error("pattern resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("weight tensor has {actual} entries, expected {expected}")]
    WeightShape { expected: usize, actual: usize },
}

/// Designed weights for all 12 beams over all STFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerBank {
    geometry: ArrayGeometry,
    stft: StftConfig,
    loading: f64,
    sample_rate: u32,
    /// Flattened `[beam][bin][mic]`.
    weights: Vec<Complex64>,
}

impl BeamformerBank {
    /// Reassembles a bank from stored parts (used when importing).
    pub fn from_parts(
        geometry: ArrayGeometry,
        stft: StftConfig,
        loading: f64,
        sample_rate: u32,
        weights: Vec<Complex64>,
    ) -> Result<Self, BeamformerError> {
        let expected = NUM_DIRECTIONS * stft.num_bins() * geometry.num_mics();
        if weights.len() != expected {
            return Err(BeamformerError::WeightShape { expected, actual: weights.len() });
        }
        Ok(BeamformerBank { geometry, stft, loading, sample_rate, weights })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn geometry_fingerprint(&self) -> u64 {
        self.geometry.fingerprint()
    }

    pub fn stft(&self) -> &StftConfig {
        &self.stft
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn num_beams(&self) -> usize {
        NUM_DIRECTIONS
    }

    /// Weights of `beam` at STFT bin `bin`, one per microphone.
    pub fn beam_weights(&self, beam: Direction, bin: usize) -> &[Complex64] {
        let m = self.geometry.num_mics();
        let start = (beam.index() * self.stft.num_bins() + bin) * m;
        &self.weights[start..start + m]
    }
}

/// Far-field steering vector for a horizontal azimuth (radians).
pub fn steering_vector(geometry: &ArrayGeometry, azimuth: f64, freq: f64) -> Vec<Complex64> {
    let u = [libm::cos(azimuth), libm::sin(azimuth), 0.0];
    let k = 2.0 * PI * freq / geometry.speed_of_sound();
    geometry
        .mic_positions()
        .iter()
        .map(|p| {
            let phase = k * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]);
            Complex64::new(libm::cos(phase), libm::sin(phase))
        })
        .collect()
}

/// Diffuse-field coherence matrix, row-major `M×M`.
pub fn diffuse_coherence(geometry: &ArrayGeometry, freq: f64) -> Vec<f64> {
    let m = geometry.num_mics();
    let k = 2.0 * PI * freq / geometry.speed_of_sound();
    let mut gamma = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let x = k * geometry.mic_distance(i, j);
            gamma[i * m + j] = if x.abs() < 1e-12 { 1.0 } else { libm::sin(x) / x };
        }
    }
    gamma
}

/// Superdirective weights for one look direction and frequency.
pub fn design_weights(
    geometry: &ArrayGeometry,
    azimuth: f64,
    freq: f64,
    loading: f64,
) -> Result<Vec<Complex64>, BeamformerError> {
    if !(loading.is_finite() && loading > 0.0) {
        return Err(BeamformerError::InvalidLoading(loading));
    }
    let m = geometry.num_mics();
    let mut a = diffuse_coherence(geometry, freq);
    let mean_diag = (0..m).map(|i| a[i * m + i]).sum::<f64>() / m as f64;
    let eps = loading * mean_diag;
    for i in 0..m {
        a[i * m + i] += eps;
    }
    let l = cholesky(&a, m).ok_or(BeamformerError::SingularCoherence(freq))?;
    let d = steering_vector(geometry, azimuth, freq);
    let mut re: Vec<f64> = d.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = d.iter().map(|c| c.im).collect();
    cholesky_solve(&l, m, &mut re);
    cholesky_solve(&l, m, &mut im);
    let z: Vec<Complex64> = re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect();
    let denom: Complex64 = d.iter().zip(&z).map(|(di, zi)| di.conj() * zi).sum();
    Ok(z.into_iter().map(|zi| zi / denom).collect())
}

/// `wᴴ d`.
pub fn response(weights: &[Complex64], steering: &[Complex64]) -> Complex64 {
    weights.iter().zip(steering).map(|(w, d)| w.conj() * d).sum()
}

/// Designs all 12 beams over every bin of `stft` at `sample_rate`.
pub fn design_bank(
    geometry: &ArrayGeometry,
    stft: StftConfig,
    loading: f64,
    sample_rate: u32,
) -> Result<BeamformerBank, BeamformerError> {
    let bins = stft.num_bins();
    let mut weights = Vec::with_capacity(NUM_DIRECTIONS * bins * geometry.num_mics());
    for beam in Direction::ALL {
        for bin in 0..bins {
            let freq = stft.bin_frequency(bin, sample_rate);
            weights.extend(design_weights(geometry, beam.radians(), freq, loading)?);
        }
    }
    Ok(BeamformerBank { geometry: geometry.clone(), stft, loading, sample_rate, weights })
}

/// Filters array audio into 12 time-domain beams ordered by direction index.
pub fn apply_bank(bank: &BeamformerBank, audio: &MultiChannelAudio) -> Result<MultiChannelAudio, BeamformerError> {
    let m = bank.geometry.num_mics();
    if audio.num_channels() != m {
        return Err(BeamformerError::ChannelCountMismatch { expected: m, actual: audio.num_channels() });
    }
    if audio.sample_rate() != bank.sample_rate {
        return Err(BeamformerError::RateMismatch { expected: bank.sample_rate, actual: audio.sample_rate() });
    }
    let stft = Stft::new(bank.stft);
    let inputs: Vec<Spectrogram> = audio.channels().iter().map(|c| stft.analyze(c)).collect();
    let beams = Direction::ALL
        .iter()
        .map(|&beam| beamform_one(bank, &stft, &inputs, beam, audio.len()))
        .collect();
    Ok(MultiChannelAudio::new(beams, audio.sample_rate(), AudioRole::Beamformed).expect("equal lengths"))
}

/// Single beam output given the per-mic spectrograms.
pub fn beamform_one(
    bank: &BeamformerBank,
    stft: &Stft,
    inputs: &[Spectrogram],
    beam: Direction,
    len: usize,
) -> Vec<f64> {
    let frames = inputs.first().map_or(0, |s| s.frames.len());
    let bins = bank.stft.num_bins();
    let out = Spectrogram {
        frames: (0..frames)
            .map(|t| {
                (0..bins)
                    .map(|k| {
                        bank.beam_weights(beam, k)
                            .iter()
                            .zip(inputs)
                            .map(|(w, x)| w.conj() * x.frames[t][k])
                            .sum()
                    })
                    .collect()
            })
            .collect(),
    };
    stft.synthesize(&out, len)
}

/// Power response `|wᴴd(θ)|²` of `beam` at `freq`, sampled every
/// `resolution` degrees over `(-180°, 180°]`. Returns `(degrees, gain)`.
pub fn directivity_pattern(
    bank: &BeamformerBank,
    beam: Direction,
    freq: f64,
    resolution: f64,
) -> Result<Vec<(f64, f64)>, BeamformerError> {
    let nyquist = f64::from(bank.sample_rate) / 2.0;
    if !(0.0..=nyquist).contains(&freq) {
        return Err(BeamformerError::FrequencyOutOfRange { freq, nyquist });
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(BeamformerError::InvalidResolution(resolution));
    }
    let w = design_weights(&bank.geometry, beam.radians(), freq, bank.loading)?;
    let steps = libm::round(360.0 / resolution).max(1.0) as usize;
    Ok((1..=steps)
        .map(|i| {
            let deg = -180.0 + 360.0 * i as f64 / steps as f64;
            let d = steering_vector(&bank.geometry, deg.to_radians(), freq);
            (deg, response(&w, &d).norm_sqr())
        })
        .collect())
}
