//! Tone-modulated pseudo-speech for running the pipeline without a corpus.
//!
//! Every word maps to a fixed harmonic tone complex (fundamental and
//! spectral tilt derived from the word) with a small seeded noise component,
//! shaped by a raised-cosine envelope. Words are separated by short pauses.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::rng::{derive_seed, hash_str, rng_from_seed};
use crate::scene::MonoUtterance;
use crate::SAMPLE_RATE;

pub const VOCABULARY: [&str; 24] = [
    "ALPHA", "BRAVO", "CHARLIE", "DELTA", "ECHO", "FOXTROT", "GOLF", "HOTEL", "INDIA", "JULIET",
    "KILO", "LIMA", "MIKE", "NOVEMBER", "OSCAR", "PAPA", "QUEBEC", "ROMEO", "SIERRA", "TANGO",
    "UNIFORM", "VICTOR", "WHISKEY", "YANKEE",
];

const PAUSE_SECONDS: f64 = 0.05;
const MAX_HARMONIC_HZ: f64 = 5000.0;

/// Duration in samples of one spoken word.
pub fn word_length(word: &str) -> usize {
    let syllables = (word.len() as f64 / 2.5).max(1.0);
    (f64::from(SAMPLE_RATE) * (0.12 + 0.06 * syllables)) as usize
}

/// Synthesizes an utterance for `tokens`.
pub fn pseudo_speech(id: &str, tokens: &[String], seed: u64) -> MonoUtterance {
    let fs = f64::from(SAMPLE_RATE);
    let pause = (PAUSE_SECONDS * fs) as usize;
    let mut rng = rng_from_seed(derive_seed(seed, hash_str(id)));
    let mut samples = Vec::new();
    samples.resize(pause, 0.0);
    for word in tokens {
        let h = hash_str(word);
        let f0 = 100.0 + (h % 150) as f64;
        let tilt = 0.5 + ((h >> 8) % 50) as f64 / 100.0;
        let glide = (((h >> 16) % 40) as f64 - 20.0) / 100.0;
        let len = word_length(word);
        let harmonics = (MAX_HARMONIC_HZ / f0) as usize;
        let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        for n in 0..len {
            let t = n as f64 / fs;
            let progress = n as f64 / len as f64;
            let env = 0.5 - 0.5 * libm::cos(2.0 * PI * progress);
            let f = f0 * (1.0 + glide * progress);
            let mut x = 0.0;
            for (k, phase) in phases.iter().enumerate() {
                let order = (k + 1) as f64;
                x += libm::pow(order, -tilt) * libm::sin(2.0 * PI * f * order * t + phase);
            }
            x += 0.3 * rng.random_range(-1.0..1.0);
            samples.push(0.2 * env * x);
        }
        samples.resize(samples.len() + pause, 0.0);
    }
    MonoUtterance {
        id: id.to_string(),
        samples,
        sample_rate: SAMPLE_RATE,
        transcript: tokens.to_vec(),
    }
}

/// Draws `min..=max` words uniformly from [`VOCABULARY`].
pub fn random_transcript<R: Rng>(rng: &mut R, min_words: usize, max_words: usize) -> Vec<String> {
    let n = rng.random_range(min_words..=max_words);
    (0..n).map(|_| VOCABULARY[rng.random_range(0..VOCABULARY.len())].to_string()).collect()
}

/// A set of `count` random utterances.
pub fn random_corpus(count: usize, min_words: usize, max_words: usize, seed: u64) -> Vec<MonoUtterance> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|i| {
            let tokens = random_transcript(&mut rng, min_words, max_words);
            pseudo_speech(&alloc::format!("utt{i:04}"), &tokens, seed)
        })
        .collect()
}
