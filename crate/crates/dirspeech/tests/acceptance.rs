//! Acceptance suite. Runs every criterion, prints one line each and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dirspeech::config::RoomSets;
use dirspeech::{Estimator, Pipeline, PipelineConfig};
use dirspeech_core::beamformer::{apply_bank, design_bank, BeamformerBank, DEFAULT_LOADING};
use dirspeech_core::cdda::{cdda_example, CddaConfig, RirIndex};
use dirspeech_core::eval::{
    edit_distance, score_multi_talker, wer, EvalItem, Prediction, RecoveryScheme,
};
use dirspeech_core::localizer::{
    estimate_doa, extract_features, label_frames, loss_and_gradient, reject_rate, train_localizer, BeamEnergyFeatures,
    FeatureVector, LabeledInterval, LinearLocalizer, TrainConfig, NUM_CLASSES,
};
use dirspeech_core::rir::{simulate_rir, Interpolation, Rir, RirParams, Room};
use dirspeech_core::rng::{derive_seed, rng_from_seed};
use dirspeech_core::scene::{apply_rir, MonoUtterance};
use dirspeech_core::sdot::{parse, serialize, CaseLabel, Segment, SerializedTranscript};
use dirspeech_core::spatial::{cyclical_distance, side_of, ArrayGeometry, Direction, DirectionSet, Side, NUM_DIRECTIONS};
use dirspeech_core::stft::StftConfig;
use dirspeech_core::synth::{pseudo_speech, random_corpus, random_transcript, VOCABULARY};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = (u8, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "WER oracle equivalence", Duration::from_secs(10), c1_wer_oracle),
        (2, "cyclical distance worked example", Duration::from_secs(1), c2_cyclical_distance),
        (3, "anechoic beam identification", Duration::from_secs(60), c3_anechoic_beams),
        (4, "reverberant localization", Duration::from_secs(600), c4_reverberant_localization),
        (5, "augmentation raises reject rate", Duration::from_secs(900), c5_cdda_effect),
        (6, "recovery scheme monotonicity", Duration::from_secs(60), c6_recovery_monotonicity),
        (7, "serialized transcript round trip", Duration::from_secs(60), c7_sdot_round_trip),
        (8, "augmentation invariants", Duration::from_secs(300), c8_cdda_invariants),
        (9, "localizer gradient check", Duration::from_secs(10), c9_gradient_check),
        (10, "empty case scoring", Duration::from_secs(1), c10_empty_case),
        (11, "end-to-end determinism", Duration::from_secs(300), c11_determinism),
    ];
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_message(&e))));
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {}  {name}: {}; {:.2}s of {}s{}",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn dir(deg: i32) -> Direction {
    Direction::from_degrees(deg).unwrap()
}

// 1

/// All-pairs shortest edit paths by breadth-first search over every string
/// of length ≤ `max_len` on `alphabet` symbols. One edge per single
/// insertion, deletion or substitution.
fn bfs_edit_oracle(max_len: usize, alphabet: u8) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let mut strings: Vec<Vec<u8>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<u8>| (0..alphabet).map(move |c| [s.as_slice(), &[c]].concat()))
            .collect();
        strings.extend(frontier.iter().cloned());
    }
    let index: BTreeMap<Vec<u8>, usize> = strings.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let neighbours: Vec<Vec<usize>> = strings
        .iter()
        .map(|s| {
            let mut out = Vec::new();
            for i in 0..s.len() {
                let mut del = s.clone();
                del.remove(i);
                out.push(index[&del]);
                for c in 0..alphabet {
                    if c != s[i] {
                        let mut sub = s.clone();
                        sub[i] = c;
                        out.push(index[&sub]);
                    }
                }
            }
            if s.len() < max_len {
                for i in 0..=s.len() {
                    for c in 0..alphabet {
                        let mut ins = s.clone();
                        ins.insert(i, c);
                        out.push(index[&ins]);
                    }
                }
            }
            out
        })
        .collect();
    let dist: Vec<Vec<u8>> = (0..strings.len())
        .into_par_iter()
        .map(|src| {
            let mut d = vec![u8::MAX; strings.len()];
            d[src] = 0;
            let mut queue = std::collections::VecDeque::from([src]);
            while let Some(v) = queue.pop_front() {
                for &w in &neighbours[v] {
                    if d[w] == u8::MAX {
                        d[w] = d[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            d
        })
        .collect();
    (strings, dist)
}

/// Edit distance by memoized recursion from the end of both sequences.
fn recursive_edit(r: &[u8], h: &[u8]) -> usize {
    fn go(r: &[u8], h: &[u8], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == 0 {
            j
        } else if j == 0 {
            i
        } else {
            let sub = go(r, h, i - 1, j - 1, memo) + usize::from(r[i - 1] != h[j - 1]);
            sub.min(go(r, h, i - 1, j, memo) + 1).min(go(r, h, i, j - 1, memo) + 1)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; h.len() + 1]; r.len() + 1];
    go(r, h, r.len(), h.len(), &mut memo)
}

fn c1_wer_oracle() -> Outcome {
    let (strings, dist) = bfs_edit_oracle(6, 3);
    let mut mismatches = 0usize;
    let mut pairs = 0usize;
    for (i, r) in strings.iter().enumerate() {
        for (j, h) in strings.iter().enumerate() {
            pairs += 1;
            if edit_distance(r, h) != usize::from(dist[i][j]) {
                mismatches += 1;
            }
            if !r.is_empty() {
                let w = wer(r, h).unwrap();
                if w.errors != usize::from(dist[i][j]) || w.ref_len != r.len() {
                    mismatches += 1;
                }
            }
        }
    }
    let mut rng = rng_from_seed(1);
    let mut random_mismatches = 0;
    for _ in 0..1000 {
        let r: Vec<u8> = (0..rng.random_range(1..40)).map(|_| rng.random_range(0..5)).collect();
        let h: Vec<u8> = (0..rng.random_range(0..40)).map(|_| rng.random_range(0..5)).collect();
        if wer(&r, &h).unwrap().errors != recursive_edit(&r, &h) {
            random_mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && random_mismatches == 0,
        format!("{pairs} exhaustive pairs, {mismatches} mismatches; 1000 random pairs, {random_mismatches} mismatches"),
    )
}

// 2

fn c2_cyclical_distance() -> Outcome {
    let a = cyclical_distance(dir(0), dir(-60));
    let b = cyclical_distance(dir(180), dir(-60));
    outcome(a == 2 && b == 4, format!("d(0,-60)={a}, d(180,-60)={b}"))
}

// 3, 4

fn bank() -> BeamformerBank {
    design_bank(&ArrayGeometry::default(), StftConfig::default(), DEFAULT_LOADING, 16_000).unwrap()
}

fn beam_features(bank: &BeamformerBank, utt: &MonoUtterance, rir: &Rir) -> BeamEnergyFeatures {
    let capture = apply_rir(utt, rir, 1.0).unwrap();
    let beams = apply_bank(bank, &capture).unwrap();
    extract_features(&beams, bank.stft()).unwrap()
}

fn utterance(id: &str, seed: u64) -> MonoUtterance {
    let mut rng = rng_from_seed(seed);
    let words = random_transcript(&mut rng, 2, 4);
    pseudo_speech(id, &words, seed)
}

fn c3_anechoic_beams() -> Outcome {
    let bank = bank();
    let room = Room::new("free", [20.0, 20.0, 10.0], 1.0, 0);
    let geometry = ArrayGeometry::default();
    let hits: Vec<String> = Direction::ALL
        .par_iter()
        .map(|&d| {
            let rir = simulate_rir(&room, &geometry, d, &RirParams::default(), 0).unwrap();
            let f = beam_features(&bank, &utterance("a", d.index() as u64), &rir);
            let est = estimate_doa(&f, 0..f.num_frames()).unwrap();
            if est == d {
                String::new()
            } else {
                format!("{d}->{est}")
            }
        })
        .collect();
    let misses: Vec<&String> = hits.iter().filter(|s| !s.is_empty()).collect();
    outcome(misses.is_empty(), format!("{}/12 correct {misses:?}", 12 - misses.len()))
}

fn c4_reverberant_localization() -> Outcome {
    let bank = bank();
    let rooms = RoomSets::default().seen;
    let geometry = ArrayGeometry::default();
    let params = RirParams { placement_jitter: 0.3, ..RirParams::default() };
    let n = 504;
    let results: Vec<(Direction, Direction)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(4, i as u64);
            let d = Direction::ALL[i % NUM_DIRECTIONS];
            let room = &rooms[(i / NUM_DIRECTIONS) % rooms.len()];
            let rir = simulate_rir(room, &geometry, d, &params, seed).unwrap();
            let f = beam_features(&bank, &utterance(&format!("s{i}"), seed), &rir);
            (d, estimate_doa(&f, 0..f.num_frames()).unwrap())
        })
        .collect();
    let acc = results.iter().filter(|(t, e)| t == e).count() as f64 / n as f64;
    let lateral: Vec<_> = results.iter().filter(|(t, _)| side_of(*t) != Side::Neither).collect();
    let lr = lateral.iter().filter(|(t, e)| side_of(*t) == side_of(*e)).count() as f64 / lateral.len() as f64;
    outcome(acc >= 0.90 && lr >= 0.98, format!("{n} scenes in {} rooms, accuracy {acc:.3}, L/R {lr:.3}", rooms.len()))
}

// 5

fn frames_with_labels(f: &BeamEnergyFeatures, stft: &StftConfig, intervals: &[LabeledInterval]) -> Vec<(FeatureVector, usize)> {
    f.frames.iter().copied().zip(label_frames(f.num_frames(), stft, intervals)).collect()
}

/// Reject rates (baseline, augmented) on distractor-only scenes for one
/// seed pair.
fn cdda_trial(seed: u64) -> (f64, f64) {
    let bank = bank();
    let stft = *bank.stft();
    let set = DirectionSet::default();
    let targets = set.target();
    let distractors = set.distractor();
    let geometry = ArrayGeometry::default();
    let rooms = RoomSets::default().seen;
    let params = RirParams { placement_jitter: 0.3, ..RirParams::default() };
    let rir = |d: Direction, k: u64| {
        let room = &rooms[(k as usize) % rooms.len()];
        simulate_rir(room, &geometry, d, &params, derive_seed(seed, (d.index() as u64) << 16 | k)).unwrap()
    };

    let corpus = random_corpus(80, 2, 4, seed);
    let index = RirIndex::new(Direction::ALL.into_iter().flat_map(|d| (0..2).map(move |k| (d, k))).map(|(d, k)| rir(d, k)));

    let baseline_data: Vec<(FeatureVector, usize)> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, u)| {
            let d = targets[i % targets.len()];
            let r = &index.get(d)[i % 2];
            let f = beam_features(&bank, u, r);
            frames_with_labels(&f, &stft, &[LabeledInterval { start: 0, end: u.samples.len(), class: d.index() }])
        })
        .collect();

    let cfg = CddaConfig { seed: derive_seed(seed, 99), ..CddaConfig::default() };
    let augmented: Vec<(FeatureVector, usize)> = (0..corpus.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let ex = cdda_example(&corpus, &index, &cfg, i).unwrap();
            let p = ex.provenance.unwrap();
            let beams = apply_bank(&bank, &ex.audio).unwrap();
            let f = extract_features(&beams, &stft).unwrap();
            let intervals: Vec<LabeledInterval> = (0..2)
                .map(|k| {
                    let len = corpus.iter().find(|u| u.id == p.utterance_ids[k]).unwrap().samples.len();
                    LabeledInterval { start: p.start_samples[k], end: p.start_samples[k] + len, class: p.directions[k].index() }
                })
                .collect();
            frames_with_labels(&f, &stft, &intervals)
        })
        .collect();

    // Held-out speakers and room responses for the test scenes.
    let test_corpus = random_corpus(40, 2, 4, derive_seed(seed, 7));
    let test_scenes: Vec<Vec<FeatureVector>> = test_corpus
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let d = distractors[i % distractors.len()];
            beam_features(&bank, u, &rir(d, 100 + i as u64)).frames
        })
        .collect();

    let train = TrainConfig { seed: derive_seed(seed, 5), ..TrainConfig::default() };
    let (base, _) = train_localizer(&baseline_data, &train).unwrap();
    let combined: Vec<_> = baseline_data.iter().chain(&augmented).copied().collect();
    let (aug, _) = train_localizer(&combined, &train).unwrap();
    (reject_rate(&base, &test_scenes, &set), reject_rate(&aug, &test_scenes, &set))
}

fn c5_cdda_effect() -> Outcome {
    let trials: Vec<(f64, f64)> = (0..5).map(|s| cdda_trial(1000 + s)).collect();
    let wins = trials.iter().filter(|(b, a)| a > b).count();
    let shown: Vec<String> = trials.iter().map(|(b, a)| format!("{b:.2}->{a:.2}")).collect();
    outcome(wins >= 4, format!("{wins}/5 seed pairs improve, baseline->augmented [{}]", shown.join(", ")))
}

// 6

fn arb_item() -> impl Strategy<Value = EvalItem> {
    (
        proptest::collection::vec((0usize..12, proptest::collection::vec(0usize..4, 1..4)), 0..5),
        0usize..12,
        0u8..4,
        any::<u32>(),
    )
        .prop_map(|(segs, t, ref_kind, id)| {
            let target = Direction::ALL[t];
            let word = |k: usize| ["ALPHA", "BRAVO", "CHARLIE", "DELTA"][k].to_string();
            let segments = segs
                .into_iter()
                .enumerate()
                .map(|(i, (d, w))| Segment { direction: Direction::ALL[d], tokens: w.into_iter().map(word).collect(), start_time: i as u64 })
                .collect();
            let reference = if ref_kind == 0 {
                SerializedTranscript { case_label: Some(CaseLabel::Empty), segments: vec![], terminated: true }
            } else {
                SerializedTranscript {
                    case_label: Some(CaseLabel::One),
                    segments: vec![Segment { direction: target, tokens: (0..ref_kind as usize).map(word).collect(), start_time: 0 }],
                    terminated: true,
                }
            };
            EvalItem {
                id: format!("item{id}"),
                reference,
                prediction: Prediction::Transcript(SerializedTranscript { case_label: None, segments, terminated: true }),
                target_direction: Some(target),
                direction_seen: true,
            }
        })
}

fn c6_recovery_monotonicity() -> Outcome {
    let mut runner = TestRunner::new(PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() });
    let mut checked = 0usize;
    let result = runner.run(&proptest::collection::vec(arb_item(), 1..40), |items| {
        let sr = |s: RecoveryScheme| -> Vec<bool> { items.iter().map(|i| score_multi_talker(i, s, 0.5).unwrap().success).collect() };
        let (none, any, sign, dist) = (
            sr(RecoveryScheme::None),
            sr(RecoveryScheme::AnyDirection),
            sr(RecoveryScheme::SignMatch),
            sr(RecoveryScheme::ShortestDistance),
        );
        for k in 0..items.len() {
            prop_assert!(!none[k] || any[k]);
            prop_assert!(!none[k] || sign[k]);
            prop_assert!(!sign[k] || dist[k]);
        }
        let count = |v: &[bool]| v.iter().filter(|b| **b).count();
        prop_assert!(count(&none) <= count(&any));
        prop_assert!(count(&none) <= count(&sign) && count(&sign) <= count(&dist));
        Ok(())
    });
    checked += 1000;
    match result {
        Ok(()) => outcome(true, format!("{checked} generated item sets, every scheme only converts failures")),
        Err(e) => outcome(false, e.to_string()),
    }
}

// 7

fn arb_transcript() -> impl Strategy<Value = SerializedTranscript> {
    let word = prop_oneof![
        proptest::sample::select(VOCABULARY.to_vec()).prop_map(str::to_string),
        "[a-z][a-z0-9']{0,6}",
    ];
    let segment = (0usize..12, proptest::collection::vec(word, 1..5));
    (0u8..4, proptest::collection::vec(segment, 1..=5), any::<bool>()).prop_map(|(case, segs, terminated)| {
        let mut segments: Vec<Segment> = segs
            .into_iter()
            .enumerate()
            .map(|(i, (d, tokens))| Segment { direction: Direction::ALL[d], tokens, start_time: i as u64 })
            .collect();
        let case_label = match case {
            0 => None,
            1 => Some(CaseLabel::One),
            2 => Some(CaseLabel::Two),
            _ => {
                segments.clear();
                Some(CaseLabel::Empty)
            }
        };
        SerializedTranscript { case_label, segments, terminated }
    })
}

fn c7_sdot_round_trip() -> Outcome {
    let mut runner = TestRunner::new(PropConfig { cases: 10_000, failure_persistence: None, ..PropConfig::default() });
    let seen = std::sync::Mutex::new(BTreeMap::<String, usize>::new());
    let result = runner.run(&arb_transcript(), |t| {
        let text = serialize(&t).unwrap();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &t.with_sequential_start_times());
        prop_assert_eq!(serialize(&back).unwrap(), text);
        let key = format!("{:?}/{}", t.case_label, t.segments.len());
        *seen.lock().unwrap().entry(key).or_default() += 1;
        Ok(())
    });
    let seen = seen.into_inner().unwrap();
    let covered = |c: &str| seen.keys().any(|k| k.starts_with(c));
    let all_counts = (1..=5).all(|n| seen.keys().any(|k| k.ends_with(&format!("/{n}"))));
    let coverage = covered("Some(Empty)") && covered("Some(One)") && covered("Some(Two)") && all_counts;
    match result {
        Ok(()) => outcome(coverage, format!("10000 transcripts, {} case/segment-count classes covered", seen.len())),
        Err(e) => outcome(false, e.to_string()),
    }
}

// 8

fn c8_cdda_invariants() -> Outcome {
    let corpus = random_corpus(1000, 1, 3, 8);
    let geometry = ArrayGeometry::default();
    let params = RirParams { interpolation: Interpolation::Nearest, ..RirParams::default() };
    let rooms = RoomSets::default().seen;
    let rirs = RirIndex::new(
        Direction::ALL
            .into_par_iter()
            .flat_map_iter(|d| {
                let (geometry, rooms) = (geometry.clone(), rooms.clone());
                (0..2u64).map(move |k| simulate_rir(&rooms[k as usize], &geometry, d, &params, k).unwrap())
            })
            .collect::<Vec<_>>(),
    );
    let cfg = CddaConfig { seed: 8, ..CddaConfig::default() };
    let set = &cfg.direction_set;
    let examples: Vec<_> = (0..corpus.len()).into_par_iter().map(|i| cdda_example(&corpus, &rirs, &cfg, i).unwrap()).collect();

    let mut direction_violations = 0;
    let mut leaks = 0;
    let mut theta1 = BTreeMap::<Direction, usize>::new();
    for ex in &examples {
        let p = ex.provenance.as_ref().unwrap();
        let [t1, t2, t3] = p.directions;
        if !set.is_target(t1) || !set.is_target(t2) || set.is_target(t3) || ex.reference.segments.iter().any(|s| s.direction == t3) {
            direction_violations += 1;
        }
        let transcript = |id: &str| corpus.iter().find(|u| u.id == id).unwrap().transcript.clone();
        let mut expected = transcript(&p.utterance_ids[0]);
        expected.extend(transcript(&p.utterance_ids[1]));
        expected.sort();
        let mut actual: Vec<String> = ex.reference.words().cloned().collect();
        actual.sort();
        if actual != expected {
            leaks += 1;
        }
        *theta1.entry(t1).or_default() += 1;
    }
    let k = set.target().len();
    let n = examples.len() as f64;
    let expected = n / k as f64;
    let stat: f64 = set.target().iter().map(|d| (theta1.get(d).copied().unwrap_or(0) as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(stat);
    let se = (n * (1.0 / k as f64) * (1.0 - 1.0 / k as f64)).sqrt();
    let within_se = set.target().iter().all(|d| (theta1.get(d).copied().unwrap_or(0) as f64 - expected).abs() <= 5.0 * se);
    outcome(
        direction_violations == 0 && leaks == 0 && p_value > 0.01 && within_se,
        format!(
            "{} examples, {direction_violations} direction violations, {leaks} reference leaks, chi2 {stat:.2} (p = {p_value:.3})",
            examples.len()
        ),
    )
}

// 9

fn c9_gradient_check() -> Outcome {
    let mut rng = rng_from_seed(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w: Vec<f64> = (0..NUM_CLASSES * NUM_DIRECTIONS).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..NUM_CLASSES).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = LinearLocalizer::from_parts(w, b).unwrap();
        let batch: Vec<(FeatureVector, usize)> = (0..4)
            .map(|_| {
                let mut x = [0.0; NUM_DIRECTIONS];
                x.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
                (x, rng.random_range(0..NUM_CLASSES))
            })
            .collect();
        let (_, grad) = loss_and_gradient(&model, &batch);
        // Five-point stencil: truncation error O(h^4) keeps roundoff small.
        let h = 1e-3;
        let n_w = model.weights.len();
        for i in 0..n_w + model.bias.len() {
            let bump = |delta: f64| {
                let mut m = model.clone();
                if i < n_w {
                    m.weights[i] += delta;
                } else {
                    m.bias[i - n_w] += delta;
                }
                loss_and_gradient(&m, &batch).0
            };
            let fd = (8.0 * (bump(h) - bump(-h)) - (bump(2.0 * h) - bump(-2.0 * h))) / (12.0 * h);
            let an = if i < n_w { grad.weights[i] } else { grad.bias[i - n_w] };
            let scale = fd.abs().max(an.abs());
            if scale > 1e-6 {
                worst = worst.max((fd - an).abs() / scale);
            }
        }
    }
    outcome(worst <= 1e-5, format!("100 instances, max relative error {worst:.2e}"))
}

// 10

fn c10_empty_case() -> Outcome {
    let empty = parse("[case=empty] <eos>").unwrap();
    let item = EvalItem {
        id: "empty".into(),
        reference: empty.clone(),
        prediction: Prediction::Transcript(empty),
        target_direction: Some(dir(90)),
        direction_seen: true,
    };
    let o = score_multi_talker(&item, RecoveryScheme::None, 0.5).unwrap();
    let rate = o.wer.map(|w| w.rate);
    outcome(o.success && rate == Some(0.0), format!("success {}, WER {rate:?}", o.success))
}

// 11

fn c11_determinism() -> Outcome {
    let run = |jobs: usize| {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::new(PipelineConfig::smoke(11), dir.path().to_path_buf(), jobs).unwrap();
        p.run(Estimator::Classifier).unwrap();
        let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
        (read("report.txt"), read("report.jsonl"), read("predictions.jsonl"), read("scenes.jsonl"))
    };
    let a = run(1);
    let b = run(4);
    let same = a == b;
    outcome(
        same,
        format!("two smoke runs (1 and 4 threads), reports {} ({} bytes)", if same { "byte-identical" } else { "differ" }, a.0.len() + a.1.len()),
    )
}
