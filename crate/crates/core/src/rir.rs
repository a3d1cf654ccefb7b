//! Shoebox room impulse responses by the image-source method.
//!
//! Walls share one frequency-independent absorption coefficient `α`; each
//! reflection scales pressure by `β = √(1−α)`. An image of order `k` at
//! distance `r` contributes `β^k / (4π r)` at delay `r / c`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, rng_from_seed};
use crate::spatial::{distance, ArrayGeometry, Direction};
use crate::SAMPLE_RATE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RirError {
    #[error("room dimensions must all be positive, got {0:?}")]
    DegenerateRoom([f64; 3]),
    #[error("absorption must lie in [0, 1], got {0}")]
    InvalidAbsorption(f64),
    #[error("source at {0:?} lies outside the room")]
    SourceOutsideRoom([f64; 3]),
    #[error("microphone {0} lies outside the room")]
    MicOutsideRoom(usize),
    #[error("source distance must be positive, got {0}")]
    InvalidDistance(f64),
}

/// Shoebox room with uniform wall absorption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: String,
    /// Extent along x, y, z in meters; the room spans `[0, L]` per axis.
    pub dimensions: [f64; 3],
    pub absorption: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

fn default_max_order() -> usize {
    8
}

impl Room {
    pub fn new(id: impl Into<String>, dimensions: [f64; 3], absorption: f64, max_order: usize) -> Self {
        Room { id: id.into(), dimensions, absorption, max_order }
    }

    pub fn validate(&self) -> Result<(), RirError> {
        if self.dimensions.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(RirError::DegenerateRoom(self.dimensions));
        }
        if !(0.0..=1.0).contains(&self.absorption) {
            return Err(RirError::InvalidAbsorption(self.absorption));
        }
        Ok(())
    }

    pub fn reflection_coefficient(&self) -> f64 {
        libm::sqrt(1.0 - self.absorption)
    }

    fn contains(&self, p: &[f64; 3]) -> bool {
        p.iter().zip(&self.dimensions).all(|(x, l)| *x > 0.0 && x < l)
    }
}

/// How a fractional arrival time is written into the tap array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Interpolation {
    /// Single tap at the rounded delay.
    Nearest,
    /// Hann-windowed sinc spanning `2·half_width` taps.
    Sinc { half_width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RirParams {
    /// Source distance from the array center, meters.
    pub distance: f64,
    /// Height of the array center above the floor, clamped into the room.
    pub array_height: f64,
    /// Uniform jitter (±meters, x and y) of the array center around the
    /// middle of the room, drawn from the seed.
    pub placement_jitter: f64,
    pub interpolation: Interpolation,
}

impl Default for RirParams {
    fn default() -> Self {
        RirParams {
            distance: 1.0,
            array_height: 1.5,
            placement_jitter: 0.0,
            interpolation: Interpolation::Sinc { half_width: 16 },
        }
    }
}

/// Multichannel impulse response from one direction to every microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub id: String,
    pub room_id: String,
    pub direction: Direction,
    pub sample_rate: u32,
    /// `taps[m]` is the filter to microphone `m`; all channels share a length.
    pub taps: Vec<Vec<f64>>,
}

impl Rir {
    pub fn num_mics(&self) -> usize {
        self.taps.len()
    }

    pub fn len(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().flatten().map(|x| x * x).sum()
    }
}

/// One mirrored source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: [f64; 3],
    pub order: usize,
    /// `β^order`; the `1/(4πr)` spreading loss is applied per microphone.
    pub reflection_gain: f64,
}

/// Every image of `source` with reflection order `≤ max_order`.
pub fn image_sources(room: &Room, source: [f64; 3], max_order: usize) -> Vec<ImageSource> {
    let beta = room.reflection_coefficient();
    let n_max = max_order as i64;
    let mut out = Vec::new();
    let axis_terms = |axis: usize| -> Vec<(f64, usize)> {
        let mut terms = Vec::new();
        for n in -n_max..=n_max {
            for q in 0..2i64 {
                let reflections = (2 * n - q).unsigned_abs() as usize;
                if reflections <= max_order {
                    let sign = if q == 0 { 1.0 } else { -1.0 };
                    let coord = sign * source[axis] + 2.0 * n as f64 * room.dimensions[axis];
                    terms.push((coord, reflections));
                }
            }
        }
        terms
    };
    let (xs, ys, zs) = (axis_terms(0), axis_terms(1), axis_terms(2));
    for &(x, ox) in &xs {
        for &(y, oy) in &ys {
            if ox + oy > max_order {
                continue;
            }
            for &(z, oz) in &zs {
                let order = ox + oy + oz;
                if order <= max_order {
                    out.push(ImageSource {
                        position: [x, y, z],
                        order,
                        reflection_gain: libm::pow(beta, order as f64),
                    });
                }
            }
        }
    }
    out
}

/// Array center used for a given room, params and seed.
pub fn array_center(room: &Room, params: &RirParams, seed: u64) -> [f64; 3] {
    let mut rng = rng_from_seed(derive_seed(seed, 0x5eed));
    let mut jitter = || {
        if params.placement_jitter > 0.0 {
            rng.random_range(-params.placement_jitter..=params.placement_jitter)
        } else {
            0.0
        }
    };
    let [lx, ly, lz] = room.dimensions;
    let x = lx / 2.0 + jitter();
    let y = ly / 2.0 + jitter();
    let z = params.array_height.min(lz * 0.9).max(lz * 0.1);
    [x, y, z]
}

/// Simulates the impulse response from a source at `params.distance` in
/// `direction` (horizontal plane through the array center) to each mic.
pub fn simulate_rir(
    room: &Room,
    geometry: &ArrayGeometry,
    direction: Direction,
    params: &RirParams,
    seed: u64,
) -> Result<Rir, RirError> {
    room.validate()?;
    if !(params.distance.is_finite() && params.distance > 0.0) {
        return Err(RirError::InvalidDistance(params.distance));
    }
    let center = array_center(room, params, seed);
    let u = direction.unit_vector();
    let source = [
        center[0] + params.distance * u[0],
        center[1] + params.distance * u[1],
        center[2] + params.distance * u[2],
    ];
    if !room.contains(&source) {
        return Err(RirError::SourceOutsideRoom(source));
    }
    let mics: Vec<[f64; 3]> = geometry
        .mic_positions()
        .iter()
        .map(|p| [center[0] + p[0], center[1] + p[1], center[2] + p[2]])
        .collect();
    if let Some(m) = mics.iter().position(|p| !room.contains(p)) {
        return Err(RirError::MicOutsideRoom(m));
    }

    let images = image_sources(room, source, room.max_order);
    let fs = f64::from(SAMPLE_RATE);
    let c = geometry.speed_of_sound();
    let half_width = match params.interpolation {
        Interpolation::Nearest => 0,
        Interpolation::Sinc { half_width } => half_width,
    };

    let mut arrivals: Vec<Vec<(f64, f64)>> = Vec::with_capacity(mics.len());
    let mut max_delay: f64 = 0.0;
    for mic in &mics {
        let per_mic: Vec<(f64, f64)> = images
            .iter()
            .map(|img| {
                let r = distance(&img.position, mic);
                let delay = r / c * fs;
                max_delay = max_delay.max(delay);
                (delay, img.reflection_gain / (4.0 * PI * r))
            })
            .collect();
        arrivals.push(per_mic);
    }

    let len = libm::ceil(max_delay) as usize + half_width + 2;
    let taps = arrivals
        .iter()
        .map(|per_mic| {
            let mut h = vec![0.0; len];
            for &(delay, amp) in per_mic {
                write_arrival(&mut h, delay, amp, params.interpolation);
            }
            h
        })
        .collect();

    Ok(Rir {
        id: format!("{}/{}/{}", room.id, direction.degrees(), seed),
        room_id: room.id.clone(),
        direction,
        sample_rate: SAMPLE_RATE,
        taps,
    })
}

fn write_arrival(h: &mut [f64], delay: f64, amp: f64, interp: Interpolation) {
    match interp {
        Interpolation::Nearest => {
            let idx = libm::round(delay) as usize;
            if idx < h.len() {
                h[idx] += amp;
            }
        }
        Interpolation::Sinc { half_width } => {
            let hw = half_width as f64;
            let base = libm::floor(delay) as isize;
            for n in (base - half_width as isize + 1)..=(base + half_width as isize) {
                if n < 0 || n as usize >= h.len() {
                    continue;
                }
                let t = n as f64 - delay;
                if t.abs() >= hw {
                    continue;
                }
                let window = 0.5 * (1.0 + libm::cos(PI * t / hw));
                h[n as usize] += amp * window * sinc(t);
            }
        }
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        libm::sin(PI * t) / (PI * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn dir(deg: i32) -> Direction {
        Direction::from_degrees(deg).unwrap()
    }

    fn nearest() -> RirParams {
        RirParams { interpolation: Interpolation::Nearest, ..RirParams::default() }
    }

    fn big_room(max_order: usize) -> Room {
        Room::new("big", [20.0, 20.0, 10.0], 0.5, max_order)
    }

    #[test]
    fn anechoic_single_tap_with_geometric_delay() {
        let g = ArrayGeometry::new(vec![[-0.05, 0.0, 0.0], [0.05, 0.0, 0.0]], 343.0).unwrap();
        let rir = simulate_rir(&big_room(0), &g, dir(0), &nearest(), 0).unwrap();
        for ch in &rir.taps {
            assert_eq!(ch.iter().filter(|x| **x != 0.0).count(), 1);
        }
        let peak = |ch: &Vec<f64>| ch.iter().position(|x| *x != 0.0).unwrap() as f64;
        // source at +x: mic 1 is 0.1 m closer
        let expected = libm::round((1.05 / 343.0) * 16000.0) - libm::round((0.95 / 343.0) * 16000.0);
        assert_eq!(peak(&rir.taps[0]) - peak(&rir.taps[1]), expected);
    }

    #[test]
    fn broadside_source_has_equal_delays() {
        let g = ArrayGeometry::new(vec![[-0.05, 0.0, 0.0], [0.05, 0.0, 0.0]], 343.0).unwrap();
        let params = RirParams::default();
        let rir = simulate_rir(&big_room(0), &g, dir(90), &params, 0).unwrap();
        for (a, b) in rir.taps[0].iter().zip(&rir.taps[1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let g = ArrayGeometry::default();
        let bad = Room::new("x", [0.0, 4.0, 3.0], 0.5, 2);
        assert!(matches!(
            simulate_rir(&bad, &g, dir(0), &RirParams::default(), 0),
            Err(RirError::DegenerateRoom(_))
        ));
        let tiny = Room::new("t", [1.5, 1.5, 3.0], 0.5, 2);
        assert!(matches!(
            simulate_rir(&tiny, &g, dir(0), &RirParams::default(), 0),
            Err(RirError::SourceOutsideRoom(_))
        ));
    }

    /// Independent enumeration: mirror the source across walls level by
    /// level, never undoing the previous reflection, and keep the shallowest
    /// depth of each distinct position.
    fn mirrored_images(room: &Room, source: [f64; 3], max_order: usize) -> Vec<([f64; 3], usize)> {
        let key = |p: &[f64; 3]| {
            [
                libm::round(p[0] * 1e6) as i64,
                libm::round(p[1] * 1e6) as i64,
                libm::round(p[2] * 1e6) as i64,
            ]
        };
        let mut seen: BTreeMap<[i64; 3], ([f64; 3], usize)> = BTreeMap::new();
        seen.insert(key(&source), (source, 0));
        let mut frontier: Vec<([f64; 3], Option<usize>)> = vec![(source, None)];
        for depth in 1..=max_order {
            let mut next = Vec::new();
            for (p, last_wall) in &frontier {
                for wall in 0..6 {
                    if Some(wall) == *last_wall {
                        continue;
                    }
                    let axis = wall / 2;
                    let mut q = *p;
                    q[axis] = if wall % 2 == 0 { -p[axis] } else { 2.0 * room.dimensions[axis] - p[axis] };
                    let k = key(&q);
                    if !seen.contains_key(&k) {
                        seen.insert(k, (q, depth));
                        next.push((q, Some(wall)));
                    }
                }
            }
            frontier = next;
        }
        seen.into_values().collect()
    }

    #[test]
    fn order_two_matches_mirror_enumeration() {
        let room = Room::new("r", [5.0, 4.0, 3.0], 0.5, 2);
        let g = ArrayGeometry::default();
        let params = nearest();
        let rir = simulate_rir(&room, &g, dir(30), &params, 0).unwrap();

        let center = array_center(&room, &params, 0);
        let u = dir(30).unit_vector();
        let src = [center[0] + u[0], center[1] + u[1], center[2]];
        let oracle = mirrored_images(&room, src, 2);
        assert_eq!(oracle.len(), 25);
        assert_eq!(image_sources(&room, src, 2).len(), oracle.len());

        let beta = libm::sqrt(0.5);
        for (m, p) in g.mic_positions().iter().enumerate() {
            let mic = [center[0] + p[0], center[1] + p[1], center[2] + p[2]];
            let mut bins: BTreeMap<usize, f64> = BTreeMap::new();
            for (pos, order) in &oracle {
                let r = distance(pos, &mic);
                let amp = libm::pow(beta, *order as f64) / (4.0 * PI * r);
                *bins.entry(libm::round(r / 343.0 * 16000.0) as usize).or_default() += amp;
            }
            let taps = &rir.taps[m];
            let nonzero = taps.iter().filter(|x| **x != 0.0).count();
            assert_eq!(nonzero, bins.len());
            let energy: f64 = taps.iter().map(|x| x * x).sum();
            let oracle_energy: f64 = bins.values().map(|a| a * a).sum();
            assert!((energy - oracle_energy).abs() < 1e-12 * oracle_energy.max(1.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let room = Room::new("r", [6.0, 5.0, 3.0], 0.4, 3);
        let params = RirParams { placement_jitter: 0.3, ..RirParams::default() };
        let g = ArrayGeometry::default();
        let a = simulate_rir(&room, &g, dir(-90), &params, 11).unwrap();
        let b = simulate_rir(&room, &g, dir(-90), &params, 11).unwrap();
        let c = simulate_rir(&room, &g, dir(-90), &params, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.taps, c.taps);
        assert!(a.energy().is_finite() && a.energy() > 0.0);
    }
}
