//! Short-time Fourier analysis/synthesis with weighted overlap-add.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::Fft;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StftError {
    #[error("FFT size {0} must be a power of two ≥ 2")]
    BadFftSize(usize),
    #[error("hop {hop} must be in 1..={fft_size}")]
    BadHop { hop: usize, fft_size: usize },
    #[error("window pair does not overlap-add to a constant at hop {0}")]
    NotPerfectReconstruction(usize),
}

/// Analysis/synthesis window pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Periodic square-root Hann for both analysis and synthesis.
    SqrtHann,
    Rectangular,
}

impl WindowKind {
    pub fn code(self) -> u8 {
        match self {
            WindowKind::SqrtHann => 0,
            WindowKind::Rectangular => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(WindowKind::SqrtHann),
            1 => Some(WindowKind::Rectangular),
            _ => None,
        }
    }

    fn samples(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::SqrtHann => (0..n)
                .map(|i| libm::sqrt(0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64)))
                .collect(),
            WindowKind::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStftConfig")]
pub struct StftConfig {
    fft_size: usize,
    hop: usize,
    window: WindowKind,
}

#[derive(Deserialize)]
struct RawStftConfig {
    fft_size: usize,
    hop: usize,
    window: WindowKind,
}

impl TryFrom<RawStftConfig> for StftConfig {
    type Error = StftError;

    fn try_from(raw: RawStftConfig) -> Result<Self, StftError> {
        StftConfig::new(raw.fft_size, raw.hop, raw.window)
    }
}

impl StftConfig {
    pub fn new(fft_size: usize, hop: usize, window: WindowKind) -> Result<Self, StftError> {
        if fft_size < 2 || !fft_size.is_power_of_two() {
            return Err(StftError::BadFftSize(fft_size));
        }
        if hop == 0 || hop > fft_size {
            return Err(StftError::BadHop { hop, fft_size });
        }
        let cfg = StftConfig { fft_size, hop, window };
        cfg.overlap_gain().ok_or(StftError::NotPerfectReconstruction(hop))?;
        Ok(cfg)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_frequency(&self, bin: usize, sample_rate: u32) -> f64 {
        bin as f64 * f64::from(sample_rate) / self.fft_size as f64
    }

    /// Constant value of `Σ_k w_a(n + k·hop)·w_s(n + k·hop)`, or `None` when
    /// the sum varies with `n`.
    fn overlap_gain(&self) -> Option<f64> {
        let w = self.window.samples(self.fft_size);
        let mut gain = None;
        for phase in 0..self.hop {
            let s: f64 = w.iter().skip(phase).step_by(self.hop).map(|x| x * x).sum();
            match gain {
                None => gain = Some(s),
                Some(g) if (s - g).abs() > 1e-9 * g.max(1.0) => return None,
                _ => {}
            }
        }
        gain.filter(|g| *g > 0.0)
    }
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig { fft_size: 512, hop: 256, window: WindowKind::SqrtHann }
    }
}

/// One-sided spectrogram: `frames[t][k]` for `k` in `0..=fft_size/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
}

/// Reusable analysis/synthesis engine for one [`StftConfig`].
#[derive(Debug, Clone)]
pub struct Stft {
    config: StftConfig,
    fft: Fft,
    window: Vec<f64>,
    gain: f64,
}

impl Stft {
    pub fn new(config: StftConfig) -> Self {
        let gain = config.overlap_gain().expect("validated at construction");
        Stft {
            config,
            fft: Fft::new(config.fft_size),
            window: config.window.samples(config.fft_size),
            gain,
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    fn front_pad(&self) -> usize {
        self.config.fft_size - self.config.hop
    }

    /// Number of frames used for a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            (self.front_pad() + len - 1) / self.config.hop + 1
        }
    }

    /// Frame `t` covers input samples `t·hop − (fft_size − hop) ..` plus
    /// `fft_size`; samples outside the signal read as zero.
    pub fn analyze(&self, signal: &[f64]) -> Spectrogram {
        let n = self.config.fft_size;
        let pad = self.front_pad() as isize;
        let frames = (0..self.num_frames(signal.len()))
            .map(|t| {
                let start = (t * self.config.hop) as isize - pad;
                let mut buf: Vec<Complex64> = (0..n)
                    .map(|i| {
                        let idx = start + i as isize;
                        let x = if idx >= 0 && (idx as usize) < signal.len() {
                            signal[idx as usize]
                        } else {
                            0.0
                        };
                        Complex64::new(x * self.window[i], 0.0)
                    })
                    .collect();
                self.fft.forward(&mut buf);
                buf.truncate(self.config.num_bins());
                buf
            })
            .collect();
        Spectrogram { frames }
    }

    /// Inverse of [`Stft::analyze`], returning exactly `len` samples.
    pub fn synthesize(&self, spec: &Spectrogram, len: usize) -> Vec<f64> {
        let n = self.config.fft_size;
        let hop = self.config.hop;
        let pad = self.front_pad();
        let mut out = vec![0.0; (spec.frames.len().max(1) - 1) * hop + n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (t, frame) in spec.frames.iter().enumerate() {
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = if k <= n / 2 { frame[k] } else { frame[n - k].conj() };
            }
            // DC and Nyquist bins of a real signal are real
            buf[0].im = 0.0;
            buf[n / 2].im = 0.0;
            self.fft.inverse(&mut buf);
            let base = t * hop;
            for i in 0..n {
                out[base + i] += buf[i].re * self.window[i];
            }
        }
        let scale = 1.0 / self.gain;
        (0..len).map(|i| out.get(pad + i).copied().unwrap_or(0.0) * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(StftConfig::new(512, 256, WindowKind::SqrtHann).is_ok());
        assert!(StftConfig::new(512, 128, WindowKind::SqrtHann).is_ok());
        assert_eq!(StftConfig::new(500, 250, WindowKind::SqrtHann), Err(StftError::BadFftSize(500)));
        assert!(matches!(
            StftConfig::new(512, 600, WindowKind::SqrtHann),
            Err(StftError::BadHop { .. })
        ));
        assert_eq!(
            StftConfig::new(512, 200, WindowKind::SqrtHann),
            Err(StftError::NotPerfectReconstruction(200))
        );
    }

    #[test]
    fn perfect_reconstruction() {
        let signal: Vec<f64> =
            (0..5000).map(|i| libm::sin(i as f64 * 0.05) + 0.3 * libm::cos(i as f64 * 1.7)).collect();
        for cfg in [
            StftConfig::default(),
            StftConfig::new(256, 64, WindowKind::SqrtHann).unwrap(),
            StftConfig::new(128, 128, WindowKind::Rectangular).unwrap(),
        ] {
            let stft = Stft::new(cfg);
            let spec = stft.analyze(&signal);
            let back = stft.synthesize(&spec, signal.len());
            assert_eq!(back.len(), signal.len());
            for (a, b) in back.iter().zip(&signal) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn short_and_empty_signals() {
        let stft = Stft::new(StftConfig::default());
        assert_eq!(stft.num_frames(0), 0);
        assert!(stft.synthesize(&stft.analyze(&[]), 0).is_empty());
        let back = stft.synthesize(&stft.analyze(&[1.0, -2.0, 3.0]), 3);
        assert!((back[2] - 3.0).abs() < 1e-12);
    }
}
