//! WAV reading and writing (PCM16 or float32).

use std::io::Cursor;
use std::path::Path;

use dirspeech_core::scene::{AudioRole, MonoUtterance, MultiChannelAudio};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::{read, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SampleFormat {
    #[default]
    Float32,
    Pcm16,
}

/// Decoded channels and sample rate.
pub fn read_channels(path: &Path) -> Result<(Vec<Vec<f64>>, u32)> {
    let bytes = read(path)?;
    let wav_err = |source| Error::Wav { path: path.to_path_buf(), source };
    let mut reader = hound::WavReader::new(Cursor::new(bytes)).map_err(wav_err)?;
    let spec = reader.spec();
    let n = usize::from(spec.channels);
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>().map_err(wav_err)?
        }
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(i32::from(spec.bits_per_sample) - 1);
            reader.samples::<i32>().map(|s| s.map(|v| f64::from(v) / scale)).collect::<Result<_, _>>().map_err(wav_err)?
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n.max(1)); n];
    for frame in interleaved.chunks(n) {
        for (c, v) in channels.iter_mut().zip(frame) {
            c.push(*v);
        }
    }
    Ok((channels, spec.sample_rate))
}

pub fn read_audio(path: &Path, role: AudioRole) -> Result<MultiChannelAudio> {
    let (channels, rate) = read_channels(path)?;
    Ok(MultiChannelAudio::new(channels, rate, role)?)
}

/// Reads a mono source; multichannel files are averaged down.
pub fn read_utterance(path: &Path, id: &str, transcript: Vec<String>, expected_rate: u32) -> Result<MonoUtterance> {
    let (channels, rate) = read_channels(path)?;
    if rate != expected_rate {
        return Err(Error::SampleRate { path: path.to_path_buf(), expected: expected_rate, actual: rate });
    }
    let samples = if channels.len() == 1 {
        channels.into_iter().next().unwrap_or_default()
    } else {
        let len = channels.first().map_or(0, Vec::len);
        (0..len).map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / channels.len() as f64).collect()
    };
    Ok(MonoUtterance { id: id.to_string(), samples, sample_rate: rate, transcript })
}

/// Encodes channels. Float output is written as is; PCM16 output is scaled
/// down when the peak would clip.
pub fn encode(channels: &[Vec<f64>], sample_rate: u32, format: SampleFormat) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: match format {
            SampleFormat::Float32 => 32,
            SampleFormat::Pcm16 => 16,
        },
        sample_format: match format {
            SampleFormat::Float32 => hound::SampleFormat::Float,
            SampleFormat::Pcm16 => hound::SampleFormat::Int,
        },
    };
    let len = channels.first().map_or(0, Vec::len);
    let peak = channels.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut buf, spec).expect("in-memory WAV header");
        for i in 0..len {
            for c in channels {
                match format {
                    SampleFormat::Float32 => w.write_sample(c[i] as f32),
                    SampleFormat::Pcm16 => w.write_sample((c[i] * scale * 32767.0).round().clamp(-32768.0, 32767.0) as i16),
                }
                .expect("in-memory WAV write");
            }
        }
        w.finalize().expect("in-memory WAV finalize");
    }
    buf.into_inner()
}

pub fn write_audio(path: &Path, channels: &[Vec<f64>], sample_rate: u32, format: SampleFormat) -> Result<()> {
    write_atomic(path, &encode(channels, sample_rate, format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_exact_for_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let chans = vec![vec![0.25, -0.5, 0.125], vec![1.5, 0.0, -2.0]];
        write_audio(&p, &chans, 16000, SampleFormat::Float32).unwrap();
        let (back, rate) = read_channels(&p).unwrap();
        assert_eq!(rate, 16000);
        assert_eq!(back, chans);
    }

    #[test]
    fn pcm16_normalizes_peak() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        write_audio(&p, &[vec![2.0, -1.0, 0.0]], 16000, SampleFormat::Pcm16).unwrap();
        let (back, _) = read_channels(&p).unwrap();
        assert!((back[0][0] - 32767.0 / 32768.0).abs() < 1e-9);
        assert!((back[0][1] + 0.5).abs() < 1e-4);
        let u = read_utterance(&p, "u", vec![], 16000).unwrap();
        assert_eq!(u.samples.len(), 3);
        assert!(matches!(read_utterance(&p, "u", vec![], 8000), Err(Error::SampleRate { .. })));
    }
}
