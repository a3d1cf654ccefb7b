//! Beamformer bank files, localizer checkpoints and training logs.
//!
//! Bank layout, little-endian throughout:
//!
//! ```text
//! magic "DSBANK\0\x01"
//! u64 geometry fingerprint
//! u32 sample rate, u32 fft size, u32 hop, u8 window code
//! f64 loading, f64 speed of sound
//! u32 mic count, then 3 × f64 per mic
//! u32 beams, u32 bins, then (re, im) f64 pairs in [beam][bin][mic] order
//! ```

use std::path::Path;

use dirspeech_core::beamformer::BeamformerBank;
use dirspeech_core::localizer::{EpochLog, LinearLocalizer, NUM_CLASSES};
use dirspeech_core::spatial::{ArrayGeometry, NUM_DIRECTIONS};
use dirspeech_core::stft::{StftConfig, WindowKind};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::{read, read_to_string, write_atomic};

const BANK_MAGIC: &[u8; 8] = b"DSBANK\0\x01";
pub const CHECKPOINT_FORMAT: &str = "dirspeech.localizer/1";

pub fn encode_bank(bank: &BeamformerBank) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(BANK_MAGIC);
    out.extend_from_slice(&bank.geometry_fingerprint().to_le_bytes());
    out.extend_from_slice(&bank.sample_rate().to_le_bytes());
    out.extend_from_slice(&(bank.stft().fft_size() as u32).to_le_bytes());
    out.extend_from_slice(&(bank.stft().hop() as u32).to_le_bytes());
    out.push(bank.stft().window().code());
    out.extend_from_slice(&bank.loading().to_le_bytes());
    out.extend_from_slice(&bank.geometry().speed_of_sound().to_le_bytes());
    out.extend_from_slice(&(bank.geometry().num_mics() as u32).to_le_bytes());
    for p in bank.geometry().mic_positions() {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(bank.num_beams() as u32).to_le_bytes());
    out.extend_from_slice(&(bank.stft().num_bins() as u32).to_le_bytes());
    for w in bank.weights() {
        out.extend_from_slice(&w.re.to_le_bytes());
        out.extend_from_slice(&w.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let s = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        s.try_into().ok()
    }

    fn u8(&mut self) -> Option<u8> {
        self.take::<1>().map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

pub fn decode_bank(bytes: &[u8], path: &Path) -> Result<BeamformerBank> {
    let bad = |reason: &str| Error::BadFormat { path: path.to_path_buf(), reason: reason.to_string() };
    let truncated = || bad("truncated bank file");
    if bytes.get(..8) != Some(BANK_MAGIC.as_slice()) {
        return Err(bad("not a beamformer bank"));
    }
    let mut r = Reader { bytes, pos: 8 };
    let fingerprint = r.u64().ok_or_else(truncated)?;
    let sample_rate = r.u32().ok_or_else(truncated)?;
    let fft = r.u32().ok_or_else(truncated)? as usize;
    let hop = r.u32().ok_or_else(truncated)? as usize;
    let window = WindowKind::from_code(r.u8().ok_or_else(truncated)?).ok_or_else(|| bad("unknown window code"))?;
    let loading = r.f64().ok_or_else(truncated)?;
    let c = r.f64().ok_or_else(truncated)?;
    let mics = r.u32().ok_or_else(truncated)? as usize;
    let mut positions = Vec::with_capacity(mics);
    for _ in 0..mics {
        positions.push([r.f64().ok_or_else(truncated)?, r.f64().ok_or_else(truncated)?, r.f64().ok_or_else(truncated)?]);
    }
    let geometry = ArrayGeometry::new(positions, c)?;
    if geometry.fingerprint() != fingerprint {
        return Err(bad("geometry fingerprint mismatch"));
    }
    let beams = r.u32().ok_or_else(truncated)? as usize;
    let bins = r.u32().ok_or_else(truncated)? as usize;
    let stft = StftConfig::new(fft, hop, window)?;
    if beams != NUM_DIRECTIONS || bins != stft.num_bins() {
        return Err(bad("beam or bin count does not match the STFT config"));
    }
    let mut weights = Vec::with_capacity(beams * bins * mics);
    for _ in 0..beams * bins * mics {
        weights.push(Complex64::new(r.f64().ok_or_else(truncated)?, r.f64().ok_or_else(truncated)?));
    }
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after weights"));
    }
    Ok(BeamformerBank::from_parts(geometry, stft, loading, sample_rate, weights)?)
}

pub fn write_bank(path: &Path, bank: &BeamformerBank) -> Result<()> {
    write_atomic(path, &encode_bank(bank))
}

pub fn read_bank(path: &Path) -> Result<BeamformerBank> {
    decode_bank(&read(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Checkpoint {
    pub fn from_model(model: &LinearLocalizer) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            weights: Tensor { shape: vec![NUM_CLASSES, NUM_DIRECTIONS], data: model.weights.clone() },
            bias: Tensor { shape: vec![NUM_CLASSES], data: model.bias.clone() },
        }
    }

    pub fn into_model(self, path: &Path) -> Result<LinearLocalizer> {
        let bad = |reason: String| Error::BadFormat { path: path.to_path_buf(), reason };
        if self.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unknown checkpoint format {}", self.format)));
        }
        if self.weights.shape != [NUM_CLASSES, NUM_DIRECTIONS] || self.bias.shape != [NUM_CLASSES] {
            return Err(bad(format!("unexpected shapes {:?} / {:?}", self.weights.shape, self.bias.shape)));
        }
        let model = LinearLocalizer::from_parts(self.weights.data, self.bias.data)?;
        if !model.is_finite() {
            return Err(bad("non-finite parameters".into()));
        }
        Ok(model)
    }
}

pub fn write_checkpoint(path: &Path, model: &LinearLocalizer) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Checkpoint::from_model(model)).expect("checkpoint serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_checkpoint(path: &Path) -> Result<LinearLocalizer> {
    let text = read_to_string(path)?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), line: 0, source })?;
    ck.into_model(path)
}

pub fn write_train_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut text = String::new();
    for e in log {
        text.push_str(&serde_json::to_string(e).expect("log serializes"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}
