//! Scoring for directional ASR output.
//!
//! Single-talker items are scored on WER, exact direction accuracy and
//! left/right accuracy. Multi-talker items ask for one target direction and
//! are scored on success rate (SR), WER over successes (sWER) and case label
//! accuracy. When the exact target tag is missing from a prediction, a
//! recovery scheme may pick a proxy segment instead.
//!
//! Every aggregate is a fold over integer counters, so results do not depend
//! on item order or on how the fold is split across threads.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{hash_str, rng_from_seed};
use crate::sdot::{CaseLabel, Segment, SerializedTranscript, TargetDirectionOutput};
use crate::spatial::{cyclical_distance, side_of, Direction, Side, NUM_DIRECTIONS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("prediction has no segments to recover from")]
    NoSegments,
    #[error("item {0} has no case header")]
    MissingCaseHeader(String),
    #[error("multi-talker item {0} has no target direction")]
    MissingTargetDirection(String),
}

/// Word-level edit count against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WerResult {
    pub errors: usize,
    pub ref_len: usize,
    pub rate: f64,
}

/// Minimum number of substitutions, insertions and deletions turning
/// `reference` into `hypothesis`.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut cur = alloc::vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r != h);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[hypothesis.len()]
}

pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<WerResult, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let errors = edit_distance(reference, hypothesis);
    Ok(WerResult { errors, ref_len: reference.len(), rate: errors as f64 / reference.len() as f64 })
}

/// Like [`wer`], but an empty reference is allowed: an empty hypothesis is
/// an exact match (rate 0), anything else is all insertions (rate 1).
pub fn score_words<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> WerResult {
    match wer(reference, hypothesis) {
        Ok(r) => r,
        Err(_) => WerResult {
            errors: hypothesis.len(),
            ref_len: 0,
            rate: if hypothesis.is_empty() { 0.0 } else { 1.0 },
        },
    }
}

/// True when an empty hypothesis meets an empty reference.
pub fn empty_match<T>(reference: &[T], hypothesis: &[T]) -> bool {
    reference.is_empty() && hypothesis.is_empty()
}

/// Case-insensitive comparison form of a token.
pub fn normalize_token(token: &str) -> String {
    token.to_uppercase()
}

fn normalized(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| normalize_token(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Transcript(SerializedTranscript),
    Target(TargetDirectionOutput),
}

impl Prediction {
    pub fn as_transcript(&self) -> SerializedTranscript {
        match self {
            Prediction::Transcript(t) => t.clone(),
            Prediction::Target(o) => SerializedTranscript {
                case_label: None,
                segments: if o.hypothesis.is_empty() {
                    Vec::new()
                } else {
                    alloc::vec![Segment { direction: o.target, tokens: o.hypothesis.clone(), start_time: 0 }]
                },
                terminated: true,
            },
        }
    }

    pub fn case_label(&self) -> Option<CaseLabel> {
        match self {
            Prediction::Transcript(t) => t.case_label,
            Prediction::Target(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub reference: SerializedTranscript,
    pub prediction: Prediction,
    /// Set for multi-talker items.
    pub target_direction: Option<Direction>,
    pub direction_seen: bool,
}

impl EvalItem {
    /// Ground-truth direction of a single-talker item.
    pub fn true_direction(&self) -> Option<Direction> {
        self.target_direction.or_else(|| self.reference.segments.first().map(|s| s.direction))
    }

    /// Direction named by the prediction, if any.
    pub fn predicted_direction(&self) -> Option<Direction> {
        match &self.prediction {
            Prediction::Transcript(t) => t.segments.first().map(|s| s.direction),
            Prediction::Target(o) => Some(o.target),
        }
    }
}

/// hits / total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Count {
    pub hits: usize,
    pub total: usize,
}

impl Count {
    pub fn add(&mut self, hit: bool) {
        self.hits += usize::from(hit);
        self.total += 1;
    }

    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }

    pub fn merge(self, other: Count) -> Count {
        Count { hits: self.hits + other.hits, total: self.total + other.total }
    }
}

/// A metric broken down by true direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionRow {
    pub metric: String,
    pub values: [Option<f64>; NUM_DIRECTIONS],
    pub counts: [usize; NUM_DIRECTIONS],
    /// Mean of the populated values.
    pub average: Option<f64>,
}

impl DirectionRow {
    pub fn new(metric: impl Into<String>, values: [Option<f64>; NUM_DIRECTIONS], counts: [usize; NUM_DIRECTIONS]) -> Self {
        let average = macro_average(&values);
        DirectionRow { metric: metric.into(), values, counts, average }
    }

    fn from_counts(metric: impl Into<String>, counts: &[Count; NUM_DIRECTIONS]) -> Self {
        DirectionRow::new(metric, counts.map(|c| c.rate()), counts.map(|c| c.total))
    }

    pub fn get(&self, d: Direction) -> Option<f64> {
        self.values[d.index()]
    }
}

pub fn macro_average(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Exact direction accuracy of single-talker items, by true direction.
pub fn direction_accuracy(items: &[EvalItem]) -> DirectionRow {
    let mut counts = [Count::default(); NUM_DIRECTIONS];
    for item in items {
        if let Some(truth) = item.true_direction() {
            counts[truth.index()].add(item.predicted_direction() == Some(truth));
        }
    }
    DirectionRow::from_counts("Acc", &counts)
}

/// Left/right agreement, defined only for lateral true directions.
pub fn lr_accuracy(items: &[EvalItem]) -> DirectionRow {
    let mut counts = [Count::default(); NUM_DIRECTIONS];
    for item in items {
        let Some(truth) = item.true_direction() else { continue };
        if side_of(truth) == Side::Neither {
            continue;
        }
        counts[truth.index()].add(item.predicted_direction().map(side_of) == Some(side_of(truth)));
    }
    DirectionRow::from_counts("L/R Acc", &counts)
}

/// Micro-averaged WER per true direction over single-talker items.
pub fn single_talker_wer(items: &[EvalItem]) -> DirectionRow {
    let mut sums = [(0usize, 0usize, 0usize); NUM_DIRECTIONS];
    for item in items {
        let Some(truth) = item.true_direction() else { continue };
        let r = normalized(&item.reference.words().cloned().collect::<Vec<_>>());
        let h = normalized(&item.prediction.as_transcript().words().cloned().collect::<Vec<_>>());
        let s = score_words(&r, &h);
        let e = &mut sums[truth.index()];
        e.0 += s.errors;
        e.1 += s.ref_len;
        e.2 += 1;
    }
    DirectionRow::new("WER", sums.map(|(e, n, _)| ratio(e, n)), sums.map(|s| s.2))
}

fn ratio(errors: usize, ref_len: usize) -> Option<f64> {
    (ref_len > 0).then(|| errors as f64 / ref_len as f64)
}

/// Proxy selection when the target tag is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryScheme {
    None,
    /// Uniformly random segment, seeded per item.
    AnyDirection,
    /// Segment on the target's side; ties go to the nearer direction, then
    /// the lower grid index.
    SignMatch,
    /// Nearest segment by cyclical distance; ties go to the segment on the
    /// target's side, then the lower grid index.
    ShortestDistance,
}

impl RecoveryScheme {
    pub const ALL: [RecoveryScheme; 4] =
        [RecoveryScheme::None, RecoveryScheme::AnyDirection, RecoveryScheme::SignMatch, RecoveryScheme::ShortestDistance];

    pub fn name(self) -> &'static str {
        match self {
            RecoveryScheme::None => "none",
            RecoveryScheme::AnyDirection => "any",
            RecoveryScheme::SignMatch => "sign",
            RecoveryScheme::ShortestDistance => "distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recovery {
    pub matched_direction: Option<Direction>,
    /// Words of every segment at the matched direction.
    pub proxy_hypothesis: Option<Vec<String>>,
    pub used_recovery: bool,
}

impl Recovery {
    fn at(prediction: &SerializedTranscript, d: Direction, used_recovery: bool) -> Self {
        Recovery { matched_direction: Some(d), proxy_hypothesis: Some(prediction.words_at(d)), used_recovery }
    }
}

/// Picks the segment answering a request for `target`. `seed` drives
/// [`RecoveryScheme::AnyDirection`].
pub fn apply_recovery(
    prediction: &SerializedTranscript,
    target: Direction,
    scheme: RecoveryScheme,
    seed: u64,
) -> Result<Recovery, EvalError> {
    if prediction.segments.iter().any(|s| s.direction == target) {
        return Ok(Recovery::at(prediction, target, false));
    }
    if scheme == RecoveryScheme::None {
        return Ok(Recovery { matched_direction: None, proxy_hypothesis: None, used_recovery: false });
    }
    if prediction.segments.is_empty() {
        return Err(EvalError::NoSegments);
    }
    let dirs = prediction.directions();
    let side = side_of(target);
    let chosen = match scheme {
        RecoveryScheme::None => unreachable!(),
        RecoveryScheme::AnyDirection => {
            let mut rng = rng_from_seed(seed);
            Some(prediction.segments[rng.random_range(0..prediction.segments.len())].direction)
        }
        RecoveryScheme::SignMatch => dirs
            .iter()
            .filter(|d| side_of(**d) == side)
            .min_by_key(|d| (cyclical_distance(**d, target), d.index()))
            .copied(),
        RecoveryScheme::ShortestDistance => dirs
            .iter()
            .min_by_key(|d| (cyclical_distance(**d, target), side_of(**d) != side, d.index()))
            .copied(),
    };
    Ok(match chosen {
        Some(d) => Recovery::at(prediction, d, true),
        None => Recovery { matched_direction: None, proxy_hypothesis: None, used_recovery: false },
    })
}

/// Per-item multi-talker outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub success: bool,
    /// Success whose proxy WER is within the content threshold.
    pub content_success: bool,
    /// Scored only on success.
    pub wer: Option<WerResult>,
    pub used_recovery: bool,
}

/// Scores one multi-talker item. An item with an empty reference succeeds
/// exactly when the prediction has nothing at the target (WER 0 over zero
/// words); recovery is not applied to it.
pub fn score_multi_talker(item: &EvalItem, scheme: RecoveryScheme, content_threshold: f64) -> Result<ItemOutcome, EvalError> {
    let target = item.target_direction.ok_or_else(|| EvalError::MissingTargetDirection(item.id.clone()))?;
    let prediction = item.prediction.as_transcript();
    let reference = normalized(&item.reference.words().cloned().collect::<Vec<_>>());
    if reference.is_empty() {
        let hyp = normalized(&prediction.words_at(target));
        let ok = empty_match(&reference, &hyp);
        return Ok(ItemOutcome {
            success: ok,
            content_success: ok,
            wer: ok.then(|| score_words(&reference, &hyp)),
            used_recovery: false,
        });
    }
    let recovery = match apply_recovery(&prediction, target, scheme, hash_str(&item.id)) {
        Ok(r) => r,
        Err(EvalError::NoSegments) => Recovery { matched_direction: None, proxy_hypothesis: None, used_recovery: false },
        Err(e) => return Err(e),
    };
    Ok(match recovery.proxy_hypothesis {
        Some(hyp) => {
            let w = score_words(&reference, &normalized(&hyp));
            ItemOutcome { success: true, content_success: w.rate <= content_threshold, wer: Some(w), used_recovery: recovery.used_recovery }
        }
        None => ItemOutcome { success: false, content_success: false, wer: None, used_recovery: false },
    })
}

/// Multi-talker aggregate for one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessScores {
    pub scheme: RecoveryScheme,
    /// Micro-averaged WER over successes, per direction.
    pub swer: DirectionRow,
    pub sr: DirectionRow,
    pub content_sr: DirectionRow,
    pub successes: usize,
    pub failures: usize,
    /// Pooled over all directions.
    pub total_errors: usize,
    pub total_ref_words: usize,
}

impl SuccessScores {
    pub fn overall_sr(&self) -> Option<f64> {
        Count { hits: self.successes, total: self.successes + self.failures }.rate()
    }

    pub fn overall_swer(&self) -> Option<f64> {
        ratio(self.total_errors, self.total_ref_words)
    }
}

pub fn swer_and_sr(items: &[EvalItem], scheme: RecoveryScheme, content_threshold: f64) -> Result<SuccessScores, EvalError> {
    let mut sr = [Count::default(); NUM_DIRECTIONS];
    let mut csr = [Count::default(); NUM_DIRECTIONS];
    let mut errs = [(0usize, 0usize, 0usize); NUM_DIRECTIONS];
    for item in items {
        let o = score_multi_talker(item, scheme, content_threshold)?;
        let k = item.target_direction.map(Direction::index).unwrap_or_default();
        sr[k].add(o.success);
        csr[k].add(o.content_success);
        if let Some(w) = o.wer {
            errs[k].0 += w.errors;
            errs[k].1 += w.ref_len;
            errs[k].2 += 1;
        }
    }
    let successes = sr.iter().map(|c| c.hits).sum::<usize>();
    let total = sr.iter().map(|c| c.total).sum::<usize>();
    let name = scheme.name();
    Ok(SuccessScores {
        scheme,
        swer: DirectionRow::new(format!("sWER[{name}]"), errs.map(|(e, n, _)| ratio(e, n)), errs.map(|e| e.2)),
        sr: DirectionRow::from_counts(format!("SR[{name}]"), &sr),
        content_sr: DirectionRow::from_counts(format!("cSR[{name}]"), &csr),
        successes,
        failures: total - successes,
        total_errors: errs.iter().map(|e| e.0).sum(),
        total_ref_words: errs.iter().map(|e| e.1).sum(),
    })
}

/// Case label accuracy, grouped by reference case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseAccuracy {
    pub one: Count,
    pub two: Count,
    pub empty: Count,
}

impl CaseAccuracy {
    pub fn get(&self, case: CaseLabel) -> Count {
        match case {
            CaseLabel::One => self.one,
            CaseLabel::Two => self.two,
            CaseLabel::Empty => self.empty,
        }
    }

    fn get_mut(&mut self, case: CaseLabel) -> &mut Count {
        match case {
            CaseLabel::One => &mut self.one,
            CaseLabel::Two => &mut self.two,
            CaseLabel::Empty => &mut self.empty,
        }
    }
}

/// References without a header are labelled by their segment count.
pub fn case_accuracy(items: &[EvalItem]) -> Result<CaseAccuracy, EvalError> {
    let mut acc = CaseAccuracy::default();
    for item in items {
        let predicted = item.prediction.case_label().ok_or_else(|| EvalError::MissingCaseHeader(item.id.clone()))?;
        let truth = item.reference.case_label.unwrap_or_else(|| CaseLabel::from_count(item.reference.segments.len()));
        acc.get_mut(truth).add(predicted == truth);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Proxy WER at or below which a success also counts toward content SR.
    pub content_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { content_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub num_items: usize,
    pub single_talker_items: usize,
    pub multi_talker_items: usize,
    pub rows: Vec<DirectionRow>,
    /// Present when every multi-talker prediction carries a case header.
    pub case_accuracy: Option<CaseAccuracy>,
    /// Per-scheme totals: (scheme, successes, failures).
    pub outcomes: Vec<(RecoveryScheme, usize, usize)>,
}

impl EvalReport {
    pub fn row(&self, metric: &str) -> Option<&DirectionRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Full report: single-talker rows, then SR/sWER rows for every scheme.
pub fn evaluate(items: &[EvalItem], config: &EvalConfig) -> Result<EvalReport, EvalError> {
    let (multi, single): (Vec<EvalItem>, Vec<EvalItem>) = items.iter().cloned().partition(|i| i.target_direction.is_some());
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    if !single.is_empty() {
        rows.push(single_talker_wer(&single));
        rows.push(direction_accuracy(&single));
        rows.push(lr_accuracy(&single));
    }
    let mut case = None;
    if !multi.is_empty() {
        for scheme in RecoveryScheme::ALL {
            let s = swer_and_sr(&multi, scheme, config.content_threshold)?;
            outcomes.push((scheme, s.successes, s.failures));
            rows.push(s.swer);
            rows.push(s.sr);
            rows.push(s.content_sr);
        }
        case = case_accuracy(&multi).ok();
    }
    Ok(EvalReport {
        num_items: items.len(),
        single_talker_items: single.len(),
        multi_talker_items: multi.len(),
        rows,
        case_accuracy: case,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Table,
    /// One JSON object per line.
    Structured,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x))
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Table => {
            let _ = write!(out, "{:<14}", "metric");
            for d in Direction::ALL {
                let _ = write!(out, "{:>8}", d.degrees());
            }
            let _ = writeln!(out, "{:>8}", "Avg");
            if report.num_items == 0 {
                let _ = writeln!(out, "n=0");
                return out;
            }
            for row in &report.rows {
                let _ = write!(out, "{:<14}", row.metric);
                for v in row.values {
                    let _ = write!(out, "{:>8}", pct(v));
                }
                let _ = writeln!(out, "{:>8}", pct(row.average));
            }
            if let Some(c) = &report.case_accuracy {
                let _ = writeln!(
                    out,
                    "Case Acc      one {} (n={})  two {} (n={})  empty {} (n={})",
                    pct(c.one.rate()),
                    c.one.total,
                    pct(c.two.rate()),
                    c.two.total,
                    pct(c.empty.rate()),
                    c.empty.total
                );
            }
            let _ = writeln!(out, "n={} (single {}, multi {})", report.num_items, report.single_talker_items, report.multi_talker_items);
        }
        ReportFormat::Structured => {
            let num = |v: Option<f64>| v.map_or_else(|| "null".to_string(), |x| format!("{x}"));
            for row in &report.rows {
                for d in Direction::ALL {
                    if let Some(v) = row.values[d.index()] {
                        let _ = writeln!(
                            out,
                            "{{\"metric\":\"{}\",\"direction\":{},\"value\":{},\"n\":{}}}",
                            row.metric,
                            d.degrees(),
                            v,
                            row.counts[d.index()]
                        );
                    }
                }
                let _ = writeln!(
                    out,
                    "{{\"metric\":\"{}\",\"direction\":\"avg\",\"value\":{},\"n\":{}}}",
                    row.metric,
                    num(row.average),
                    row.counts.iter().sum::<usize>()
                );
            }
            if let Some(c) = &report.case_accuracy {
                for case in CaseLabel::ALL {
                    let k = c.get(case);
                    let _ = writeln!(out, "{{\"metric\":\"Case Acc\",\"case\":\"{case}\",\"value\":{},\"n\":{}}}", num(k.rate()), k.total);
                }
            }
            for (scheme, s, f) in &report.outcomes {
                let _ = writeln!(out, "{{\"scheme\":\"{}\",\"successes\":{s},\"failures\":{f}}}", scheme.name());
            }
            let _ = writeln!(out, "{{\"items\":{}}}", report.num_items);
        }
    }
    out
}
