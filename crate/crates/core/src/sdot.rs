//! Direction-tagged serialized transcripts.
//!
//! Surface syntax, atoms separated by single spaces:
//!
//! ```text
//! [case=two] <-30°> A B <-30°> C <eos>
//! ```
//!
//! * optional case header `[case=one|two|empty]`, first atom only
//! * one `<θ°>` tag per segment, followed by at least one word
//! * optional terminating `<eos>`
//!
//! The speaker-change token `<sc>` is accepted and ignored by the parser.
//! Single-direction outputs use the `θ°: words` form.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::Direction;

pub const EOS: &str = "<eos>";
pub const SPEAKER_CHANGE: &str = "<sc>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdotError {
    #[error("segments are not ordered by start time then direction (at segment {0})")]
    UnorderedSegments(usize),
    #[error("segment {0} has no words")]
    EmptySegment(usize),
    #[error("token {0:?} cannot be serialized as a word")]
    InvalidToken(String),
    #[error("malformed tag {0:?}")]
    MalformedTag(String),
    #[error("malformed case header {0:?}")]
    MalformedHeader(String),
    #[error("direction {0}° is not on the grid")]
    OffGridDirection(i32),
    #[error("word {0:?} appears before any direction tag")]
    DanglingTokens(String),
    #[error("content {0:?} follows <eos>")]
    TrailingAfterEos(String),
    #[error("malformed direction output {0:?}")]
    MalformedOutput(String),
    #[error("case label {label} inconsistent with {segments} segment(s)")]
    CaseMismatch { label: CaseLabel, segments: usize },
}

/// Expected output shape for a target-direction request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    One,
    /// Two speakers share the requested direction.
    Two,
    /// Nobody speaks from the requested direction.
    Empty,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 3] = [CaseLabel::One, CaseLabel::Two, CaseLabel::Empty];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::One => "one",
            CaseLabel::Two => "two",
            CaseLabel::Empty => "empty",
        }
    }

    /// Label for `n` speakers found at the requested direction.
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => CaseLabel::Empty,
            1 => CaseLabel::One,
            _ => CaseLabel::Two,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub direction: Direction,
    pub tokens: Vec<String>,
    /// Only used for ordering.
    pub start_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SerializedTranscript {
    pub case_label: Option<CaseLabel>,
    pub segments: Vec<Segment>,
    pub terminated: bool,
}

impl SerializedTranscript {
    pub fn without_case_label(mut self) -> Self {
        self.case_label = None;
        self
    }

    /// All words in order, across segments.
    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.segments.iter().flat_map(|s| s.tokens.iter())
    }

    /// Words of every segment tagged `direction`, in order.
    pub fn words_at(&self, direction: Direction) -> Vec<String> {
        self.segments
            .iter()
            .filter(|s| s.direction == direction)
            .flat_map(|s| s.tokens.iter().cloned())
            .collect()
    }

    /// Directions present, in first-appearance order, without repeats.
    pub fn directions(&self) -> Vec<Direction> {
        let mut out: Vec<Direction> = Vec::new();
        for s in &self.segments {
            if !out.contains(&s.direction) {
                out.push(s.direction);
            }
        }
        out
    }

    /// Checks ordering and word validity.
    pub fn check_serializable(&self) -> Result<(), SdotError> {
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.tokens.is_empty() {
                return Err(SdotError::EmptySegment(i));
            }
            if let Some(bad) = seg.tokens.iter().find(|t| !is_word(t)) {
                return Err(SdotError::InvalidToken(bad.clone()));
            }
            if i > 0 {
                let prev = &self.segments[i - 1];
                if (prev.start_time, prev.direction.index()) > (seg.start_time, seg.direction.index()) {
                    return Err(SdotError::UnorderedSegments(i));
                }
            }
        }
        Ok(())
    }

    /// Checks the case header against the segment count: `Empty` iff no
    /// segments, `Two` needs at least two.
    pub fn check_case_label(&self) -> Result<(), SdotError> {
        let n = self.segments.len();
        let ok = match self.case_label {
            None => true,
            Some(CaseLabel::Empty) => n == 0,
            Some(CaseLabel::One) => n >= 1,
            Some(CaseLabel::Two) => n >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(SdotError::CaseMismatch { label: self.case_label.unwrap(), segments: n })
        }
    }

    /// Copy with start times replaced by appearance order, as produced by
    /// [`parse`].
    pub fn with_sequential_start_times(&self) -> Self {
        let mut t = self.clone();
        for (i, s) in t.segments.iter_mut().enumerate() {
            s.start_time = i as u64;
        }
        t
    }
}

fn is_word(t: &str) -> bool {
    !t.is_empty()
        && !t.chars().any(char::is_whitespace)
        && !t.starts_with('<')
        && !t.starts_with('[')
        && !t.ends_with("°:")
}

pub fn direction_tag(d: Direction) -> String {
    format!("<{}°>", d.degrees())
}

pub fn serialize(t: &SerializedTranscript) -> Result<String, SdotError> {
    t.check_serializable()?;
    let mut atoms: Vec<String> = Vec::new();
    if let Some(label) = t.case_label {
        atoms.push(format!("[case={}]", label.as_str()));
    }
    for seg in &t.segments {
        atoms.push(direction_tag(seg.direction));
        atoms.extend(seg.tokens.iter().cloned());
    }
    if t.terminated {
        atoms.push(EOS.to_string());
    }
    Ok(atoms.join(" "))
}

pub fn parse(text: &str) -> Result<SerializedTranscript, SdotError> {
    let mut out = SerializedTranscript::default();
    for (i, atom) in text.split_whitespace().enumerate() {
        if out.terminated {
            return Err(SdotError::TrailingAfterEos(atom.to_string()));
        }
        if atom.starts_with('[') {
            if i != 0 {
                return Err(SdotError::MalformedHeader(atom.to_string()));
            }
            out.case_label = Some(parse_header(atom)?);
        } else if atom == EOS {
            out.terminated = true;
        } else if atom == SPEAKER_CHANGE {
            continue;
        } else if atom.starts_with('<') {
            let direction = parse_tag(atom)?;
            if let Some(last) = out.segments.last() {
                if last.tokens.is_empty() {
                    return Err(SdotError::EmptySegment(out.segments.len() - 1));
                }
            }
            let start_time = out.segments.len() as u64;
            out.segments.push(Segment { direction, tokens: Vec::new(), start_time });
        } else {
            match out.segments.last_mut() {
                Some(seg) => seg.tokens.push(atom.to_string()),
                None => return Err(SdotError::DanglingTokens(atom.to_string())),
            }
        }
    }
    if let Some(last) = out.segments.last() {
        if last.tokens.is_empty() {
            return Err(SdotError::EmptySegment(out.segments.len() - 1));
        }
    }
    Ok(out)
}

fn parse_header(atom: &str) -> Result<CaseLabel, SdotError> {
    let inner = atom
        .strip_prefix("[case=")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| SdotError::MalformedHeader(atom.to_string()))?;
    CaseLabel::ALL
        .into_iter()
        .find(|c| c.as_str() == inner)
        .ok_or_else(|| SdotError::MalformedHeader(atom.to_string()))
}

fn parse_tag(atom: &str) -> Result<Direction, SdotError> {
    let inner = atom
        .strip_prefix('<')
        .and_then(|s| s.strip_suffix("°>"))
        .ok_or_else(|| SdotError::MalformedTag(atom.to_string()))?;
    let degrees: i32 = inner.parse().map_err(|_| SdotError::MalformedTag(atom.to_string()))?;
    Direction::from_degrees(degrees).map_err(|_| SdotError::OffGridDirection(degrees))
}

/// Output for a single requested direction: `θ°: words`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDirectionOutput {
    pub target: Direction,
    pub hypothesis: Vec<String>,
}

pub fn render_target_output(o: &TargetDirectionOutput) -> String {
    let mut s = format!("{}°:", o.target.degrees());
    for w in &o.hypothesis {
        s.push(' ');
        s.push_str(w);
    }
    s
}

pub fn parse_target_output(text: &str) -> Result<TargetDirectionOutput, SdotError> {
    let text = text.trim();
    let (head, rest) = text.split_once("°:").ok_or_else(|| SdotError::MalformedOutput(text.to_string()))?;
    let degrees: i32 = head.trim().parse().map_err(|_| SdotError::MalformedOutput(text.to_string()))?;
    let target = Direction::from_degrees(degrees).map_err(|_| SdotError::OffGridDirection(degrees))?;
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return Err(SdotError::MalformedOutput(text.to_string()));
    }
    Ok(TargetDirectionOutput { target, hypothesis: rest.split_whitespace().map(str::to_string).collect() })
}

/// A source as recorded in a scene manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSource {
    pub direction: Direction,
    pub start_sample: u64,
    pub transcript: Vec<String>,
}

/// Reference for a scene. With `target` set, only sources at those
/// directions are kept; the case label counts the kept sources.
pub fn build_reference(sources: &[ReferenceSource], target: Option<&[Direction]>) -> SerializedTranscript {
    let mut kept: Vec<&ReferenceSource> = sources
        .iter()
        .filter(|s| target.is_none_or(|t| t.contains(&s.direction)))
        .filter(|s| !s.transcript.is_empty())
        .collect();
    kept.sort_by_key(|s| (s.start_sample, s.direction.index()));
    SerializedTranscript {
        case_label: Some(CaseLabel::from_count(kept.len())),
        segments: kept
            .into_iter()
            .map(|s| Segment { direction: s.direction, tokens: s.transcript.clone(), start_time: s.start_sample })
            .collect(),
        terminated: true,
    }
}
