//! Brute-force reference implementations, written without the library's
//! frame or window helpers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use vadcal::ingest::SessionBundle;
use vadcal::model::{
    FrameScores, Group, Role, SessionAnnotation, SessionMeta, SpeechSegment, TimeSpan,
};

pub const HOP: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub fn_frames: u64,
    pub fp_frames: u64,
    pub speech: u64,
    pub nonspeech: u64,
}

impl Counts {
    pub fn fnr(&self) -> Option<f64> {
        (self.speech > 0).then(|| self.fn_frames as f64 / self.speech as f64)
    }

    pub fn fpr(&self) -> Option<f64> {
        (self.nonspeech > 0).then(|| self.fp_frames as f64 / self.nonspeech as f64)
    }

    pub fn objective(&self) -> f64 {
        self.fnr().unwrap_or(0.0) + self.fpr().unwrap_or(0.0)
    }
}

/// Random segments in ms resolution; same-role segments never overlap but
/// the two roles may.
pub fn random_segments(rng: &mut impl Rng, total: f64) -> Vec<(f64, f64, Role)> {
    let total_ms = (total * 1000.0).round() as i64;
    let mut out = Vec::new();
    for role in Role::ALL {
        let mut t = rng.random_range(0..400);
        while t < total_ms {
            let len = rng.random_range(10..1500);
            let end = (t + len).min(total_ms);
            if end > t {
                out.push((t as f64 / 1000.0, end as f64 / 1000.0, role));
            }
            t = end + rng.random_range(0..1200);
        }
    }
    out
}

/// A bundle with `n` frames; half of the scores lie on the 0.01 grid to
/// exercise ties with grid thresholds.
pub fn random_bundle(seed: u64, n: usize) -> (SessionBundle, Vec<(f64, f64, Role)>) {
    random_bundle_with(seed, n, false)
}

pub fn random_bundle_with(
    seed: u64,
    n: usize,
    disjoint_roles: bool,
) -> (SessionBundle, Vec<(f64, f64, Role)>) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let segs = random_segments(&mut rng, n as f64 * HOP);
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            let s: f64 = rng.random();
            if rng.random_bool(0.5) {
                (s * 100.0).round() / 100.0
            } else {
                s
            }
        })
        .collect();
    let segs = if disjoint_roles {
        drop_cross_role_overlap(segs)
    } else {
        segs
    };
    (bundle_from(&format!("rand{seed}"), &segs, scores), segs)
}

/// Removes child segments that overlap any clinician segment.
pub fn drop_cross_role_overlap(segs: Vec<(f64, f64, Role)>) -> Vec<(f64, f64, Role)> {
    let clin: Vec<_> = segs
        .iter()
        .filter(|s| s.2 == Role::Clinician)
        .copied()
        .collect();
    segs.into_iter()
        .filter(|&(s, e, r)| {
            r == Role::Clinician || clin.iter().all(|&(cs, ce, _)| e <= cs || ce <= s)
        })
        .collect()
}

pub fn bundle_from(id: &str, segs: &[(f64, f64, Role)], scores: Vec<f64>) -> SessionBundle {
    let total = scores.len() as f64 * HOP;
    let ann = SessionAnnotation::new(
        id,
        segs.iter()
            .map(|&(s, e, role)| SpeechSegment {
                span: TimeSpan::new(s, e).unwrap(),
                role,
            })
            .collect(),
        total,
    )
    .unwrap();
    let fs = FrameScores::new(id, HOP, scores).unwrap();
    let meta = SessionMeta::new(id, Group::Control, None).unwrap();
    SessionBundle::new(ann, fs, meta).unwrap()
}

/// Roles speaking at the center of frame `k`.
pub fn speakers_at(segs: &[(f64, f64, Role)], k: usize, hop: f64) -> (bool, bool) {
    let c = (k as f64 + 0.5) * hop;
    let speaks = |r: Role| {
        segs.iter()
            .any(|&(s, e, role)| role == r && s <= c && c < e)
    };
    (speaks(Role::Clinician), speaks(Role::Child))
}

/// Confusion counts over frames `frames` by direct enumeration.
pub fn brute_counts(
    segs: &[(f64, f64, Role)],
    scores: &[f64],
    hop: f64,
    threshold: f64,
    filter: Option<Role>,
    frames: impl Iterator<Item = usize>,
) -> Counts {
    let mut c = Counts::default();
    for k in frames {
        let (clin, child) = speakers_at(segs, k, hop);
        let is_speech = match filter {
            None => clin || child,
            Some(Role::Clinician) => clin,
            Some(Role::Child) => child,
        };
        let nobody = !clin && !child;
        let predicted = scores[k] > threshold;
        if is_speech {
            c.speech += 1;
            c.fn_frames += u64::from(!predicted);
        } else if nobody {
            c.nonspeech += 1;
            c.fp_frames += u64::from(predicted);
        }
    }
    c
}

/// Frame indices of fixed windows of `len` seconds over `n` frames, keeping
/// a trailing window only when it is at least half as long.
pub fn brute_windows(n: usize, hop: f64, len: f64) -> Vec<Vec<usize>> {
    let total = n as f64 * hop;
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let start = i as f64 * len;
        let mut end = (i + 1) as f64 * len;
        if end > total + 1e-6 {
            if total - start < 0.5 * len - 1e-6 || total - start <= 1e-6 {
                break;
            }
            end = total;
        }
        out.push(
            (0..n)
                .filter(|&k| {
                    let c = (k as f64 + 0.5) * hop;
                    start <= c && c < end
                })
                .collect(),
        );
        i += 1;
    }
    out
}

pub fn grid_points() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}
