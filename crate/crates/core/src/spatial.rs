//! Azimuth grid, direction sets and microphone array geometry.
//!
//! Directions live on a fixed 12-point grid at 30° spacing,
//! `{-150, -120, …, 150, 180}`. Index 0 is -150° and index 11 is 180°.
//! Azimuth 0° is straight ahead (+x); positive angles turn toward the
//! right side (+y), negative angles toward the left.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of grid directions.
pub const NUM_DIRECTIONS: usize = 12;

/// Angular spacing of the grid in degrees.
pub const GRID_STEP_DEGREES: i32 = 30;

/// Default speed of sound in m/s.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Default frontal target directions.
pub const FRONTAL_DEGREES: [i32; 5] = [-60, -30, 0, 30, 60];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("{0}° is not on the 30° direction grid")]
    NonGridDegree(i32),
    #[error("direction {0}° listed more than once")]
    DuplicateDegree(i32),
    #[error("direction index {0} out of range 0..12")]
    IndexOutOfRange(usize),
    #[error("array geometry needs at least two microphones, got {0}")]
    TooFewMics(usize),
    #[error("microphones {0} and {1} share a position")]
    CoincidentMics(usize, usize),
    #[error("microphone {0} has a non-finite coordinate")]
    NonFinitePosition(usize),
    #[error("speed of sound must be positive and finite, got {0}")]
    InvalidSpeedOfSound(f64),
}

/// One of the 12 grid azimuths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(u8);

impl Direction {
    /// All grid directions in ascending-degree order.
    pub const ALL: [Direction; NUM_DIRECTIONS] = {
        let mut all = [Direction(0); NUM_DIRECTIONS];
        let mut i = 0;
        while i < NUM_DIRECTIONS {
            all[i] = Direction(i as u8);
            i += 1;
        }
        all
    };

    pub fn from_index(index: usize) -> Result<Self, SpatialError> {
        if index < NUM_DIRECTIONS {
            Ok(Direction(index as u8))
        } else {
            Err(SpatialError::IndexOutOfRange(index))
        }
    }

    pub fn from_degrees(degrees: i32) -> Result<Self, SpatialError> {
        if degrees % GRID_STEP_DEGREES != 0 || degrees <= -180 || degrees > 180 {
            return Err(SpatialError::NonGridDegree(degrees));
        }
        Ok(Direction(((degrees + 150) / GRID_STEP_DEGREES) as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn degrees(self) -> i32 {
        self.0 as i32 * GRID_STEP_DEGREES - 150
    }

    pub fn radians(self) -> f64 {
        f64::from(self.degrees()).to_radians()
    }

    /// Horizontal unit vector pointing from the array toward this direction.
    pub fn unit_vector(self) -> [f64; 3] {
        let a = self.radians();
        [libm::cos(a), libm::sin(a), 0.0]
    }

    pub fn side(self) -> Side {
        side_of(self)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let degrees = i32::deserialize(deserializer)?;
        Direction::from_degrees(degrees).map_err(serde::de::Error::custom)
    }
}

/// Lateral side of a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    /// On the front/back axis (0° or 180°).
    Neither,
}

/// Minimal number of 30° steps between two grid directions, in `0..=6`.
pub fn cyclical_distance(a: Direction, b: Direction) -> usize {
    let n = NUM_DIRECTIONS;
    let forward = (a.index() + n - b.index()) % n;
    let backward = (b.index() + n - a.index()) % n;
    forward.min(backward)
}

pub fn side_of(d: Direction) -> Side {
    match d.degrees() {
        deg if deg < 0 => Side::Left,
        0 | 180 => Side::Neither,
        _ => Side::Right,
    }
}

/// Partition of the grid into target and distractor directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectionSet {
    target: [bool; NUM_DIRECTIONS],
}

impl DirectionSet {
    pub fn all(&self) -> [Direction; NUM_DIRECTIONS] {
        Direction::ALL
    }

    pub fn target(&self) -> Vec<Direction> {
        Direction::ALL.into_iter().filter(|d| self.target[d.index()]).collect()
    }

    pub fn distractor(&self) -> Vec<Direction> {
        Direction::ALL.into_iter().filter(|d| !self.target[d.index()]).collect()
    }

    pub fn is_target(&self, d: Direction) -> bool {
        self.target[d.index()]
    }

    pub fn target_degrees(&self) -> Vec<i32> {
        self.target().into_iter().map(Direction::degrees).collect()
    }
}

impl Default for DirectionSet {
    fn default() -> Self {
        make_direction_set(&FRONTAL_DEGREES).expect("frontal set is on the grid")
    }
}

impl Serialize for DirectionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.target_degrees().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DirectionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let degrees = Vec::<i32>::deserialize(deserializer)?;
        make_direction_set(&degrees).map_err(serde::de::Error::custom)
    }
}

/// Builds a direction set from its target degrees; everything else on the
/// grid becomes a distractor.
pub fn make_direction_set(target_degrees: &[i32]) -> Result<DirectionSet, SpatialError> {
    let mut target = [false; NUM_DIRECTIONS];
    for &deg in target_degrees {
        let d = Direction::from_degrees(deg)?;
        if target[d.index()] {
            return Err(SpatialError::DuplicateDegree(deg));
        }
        target[d.index()] = true;
    }
    Ok(DirectionSet { target })
}

/// Microphone positions (meters, array-centered frame) and speed of sound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct ArrayGeometry {
    mic_positions: Vec<[f64; 3]>,
    speed_of_sound: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    mic_positions: Vec<[f64; 3]>,
    #[serde(default = "default_speed")]
    speed_of_sound: f64,
}

fn default_speed() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

impl TryFrom<RawGeometry> for ArrayGeometry {
    type Error = SpatialError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        ArrayGeometry::new(raw.mic_positions, raw.speed_of_sound)
    }
}

impl From<ArrayGeometry> for RawGeometry {
    fn from(g: ArrayGeometry) -> Self {
        RawGeometry { mic_positions: g.mic_positions, speed_of_sound: g.speed_of_sound }
    }
}

impl ArrayGeometry {
    pub fn new(mic_positions: Vec<[f64; 3]>, speed_of_sound: f64) -> Result<Self, SpatialError> {
        if mic_positions.len() < 2 {
            return Err(SpatialError::TooFewMics(mic_positions.len()));
        }
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(SpatialError::InvalidSpeedOfSound(speed_of_sound));
        }
        for (i, p) in mic_positions.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(SpatialError::NonFinitePosition(i));
            }
            for (j, q) in mic_positions.iter().enumerate().skip(i + 1) {
                if p == q {
                    return Err(SpatialError::CoincidentMics(i, j));
                }
            }
        }
        Ok(ArrayGeometry { mic_positions, speed_of_sound })
    }

    /// Six microphones on a ring of `radius` meters plus one at the center.
    pub fn ring_with_center(radius: f64, speed_of_sound: f64) -> Result<Self, SpatialError> {
        let mut mics = Vec::with_capacity(7);
        for k in 0..6 {
            let a = core::f64::consts::PI / 3.0 * k as f64;
            mics.push([radius * libm::cos(a), radius * libm::sin(a), 0.0]);
        }
        mics.push([0.0, 0.0, 0.0]);
        Self::new(mics, speed_of_sound)
    }

    /// Default 7-mic layout: 0.08 m ring of six plus a center mic.
    pub fn default_seven_mic() -> Self {
        Self::ring_with_center(0.08, DEFAULT_SPEED_OF_SOUND).expect("default geometry is valid")
    }

    pub fn mic_positions(&self) -> &[[f64; 3]] {
        &self.mic_positions
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn mic_distance(&self, i: usize, j: usize) -> f64 {
        distance(&self.mic_positions[i], &self.mic_positions[j])
    }

    /// Stable 64-bit FNV-1a digest over the exact bit patterns of the
    /// positions and speed of sound.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&(self.mic_positions.len() as u64).to_le_bytes());
        for p in &self.mic_positions {
            for c in p {
                h.write(&c.to_bits().to_le_bytes());
            }
        }
        h.write(&self.speed_of_sound.to_bits().to_le_bytes());
        h.finish()
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::default_seven_mic()
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
